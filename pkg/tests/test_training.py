"""
Unit tests for the optimizer, checkpoints, the training loop, gradient checking and counting
"""
import functools
import json
import zipfile

import pytest
import numpy as np
import sys
import os
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.data.batching import split_scenes
from src.data.synthetic import SynthConfig, generate_synthetic
from src.evaluation.baselines import constant_velocity_report
from src.evaluation.evaluator import evaluate
from src.model.age import group_recovery
from src.model.mart import MART
from src.training.checkpoint import load_checkpoint, save_checkpoint
from src.training.counting import count_macs, count_params, mac_breakdown, param_breakdown
from src.training.gradcheck import ABS_FLOOR, _entry_errors, gradcheck, negligible_entries
from src.training.optimizer import Adam, step_decay
from src.training.trainer import Trainer
from src.utils.config import build_config, load_scenarios
from src.utils.errors import ConfigError, DataError, FormatError, VersionError

ETH_PARAMS = 1530721
ETH_MACS_10 = 42590720


def tiny(**changes):
    values = {"precision": "single"}
    values.update(changes)
    return build_config(preset="tiny", overrides=values)


def tiny_scenes(n=6, seed=0):
    return generate_synthetic(SynthConfig(num_scenes=n, agents_per_scene=4, groups_per_scene=2,
                                          t_p=4, t_f=3, seed=seed))


def scenario_split(name):
    scenario = load_scenarios()[name]
    scenes = generate_synthetic(SynthConfig.from_dict(scenario["data"]))
    return split_scenes(scenes, scenario["held_out"] / len(scenes), seed=0)


class TestOptimizer:
    """Adam and the learning-rate schedule"""

    def test_step_decay(self):
        """The rate halves every 100 epochs"""
        assert step_decay(1e-3, 0) == 1e-3
        assert step_decay(1e-3, 99) == 1e-3
        assert step_decay(1e-3, 100) == pytest.approx(5e-4)
        assert step_decay(1e-3, 250) == pytest.approx(2.5e-4)
        with pytest.raises(ConfigError):
            step_decay(1e-3, 1, every=0)

    def test_zero_learning_rate_keeps_values(self):
        """lr = 0 leaves every parameter bit-identical"""
        model = MART(tiny())
        before = model.params.state_dict()
        optimizer = Adam(model.params, lr=0.0)
        rng = np.random.default_rng(0)
        for _ in range(3):
            optimizer.step({name: rng.normal(size=shape) for name, shape in model.params.shapes().items()})
        for name, value in model.params.state_dict().items():
            assert np.array_equal(value, before[name])
        assert optimizer.t == 3

    def test_first_step_moves_by_lr(self):
        """Bias-corrected first Adam step has magnitude lr for every non-zero gradient"""
        model = MART(tiny(precision="double"))
        before = model.params.state_dict()
        grads = {name: np.full(shape, 0.3) for name, shape in model.params.shapes().items()}
        Adam(model.params, lr=0.01).step(grads)
        for name, value in model.params.state_dict().items():
            np.testing.assert_allclose(before[name] - value, 0.01, rtol=1e-6)

    def test_state_mismatch(self):
        """Moment buffers for other parameters are refused"""
        optimizer = Adam(MART(tiny()).params)
        state = optimizer.state_dict()
        state["m"].popitem()
        with pytest.raises(VersionError):
            optimizer.load_state_dict(state)


class TestCheckpoint:
    """Checkpoint archives"""

    def test_round_trip_is_exact(self, tmp_path):
        """Values, counters and the config survive a save and load"""
        cfg = tiny()
        model = MART(cfg)
        path = save_checkpoint(tmp_path / "m.ckpt", cfg, model.params, epoch=3, step=12)
        checkpoint = load_checkpoint(path)
        assert checkpoint.epoch == 3
        assert checkpoint.step == 12
        assert checkpoint.config == cfg
        restored = checkpoint.build_model()
        for name, value in model.params.state_dict().items():
            assert np.array_equal(restored.params[name].data, value)
        scene = tiny_scenes(1)[0]
        assert np.array_equal(restored.predict(scene), model.predict(scene))

    def test_payload_layout(self, tmp_path):
        """Manifest order matches the store; the payload is float32"""
        cfg = tiny()
        model = MART(cfg)
        path = save_checkpoint(tmp_path / "m.ckpt", cfg, model.params, optimizer=Adam(model.params))
        with zipfile.ZipFile(path) as archive:
            manifest = json.loads(archive.read("manifest.json"))
            assert manifest["format_version"] == 1
            assert [p["name"] for p in manifest["parameters"]] == model.params.names()
            assert len(archive.read("params.bin")) == 4 * count_params(cfg)
            assert len(archive.read("optimizer.bin")) == 8 * count_params(cfg)

    def test_dimension_mismatch(self, tmp_path):
        """Model dimensions must match; training settings may differ"""
        cfg = tiny()
        path = save_checkpoint(tmp_path / "m.ckpt", cfg, MART(cfg).params)
        with pytest.raises(VersionError):
            load_checkpoint(path).build_model(cfg.replace(d_n=16))
        # training settings may differ
        load_checkpoint(path).build_model(cfg.replace(lr=0.5))

    def test_not_an_archive(self, tmp_path):
        """A file that is not an archive is a format error"""
        path = tmp_path / "junk.ckpt"
        path.write_bytes(b"not a zip")
        with pytest.raises(FormatError):
            load_checkpoint(path)

    def test_truncated_payload(self, tmp_path):
        """A short payload is a format error"""
        cfg = tiny()
        path = save_checkpoint(tmp_path / "m.ckpt", cfg, MART(cfg).params)
        with zipfile.ZipFile(path) as archive:
            manifest = archive.read("manifest.json")
            payload = archive.read("params.bin")
        broken = tmp_path / "broken.ckpt"
        with zipfile.ZipFile(broken, "w") as archive:
            archive.writestr("manifest.json", manifest)
            archive.writestr("params.bin", payload[:-4])
        with pytest.raises(FormatError):
            load_checkpoint(broken)

    def test_unknown_format_version(self, tmp_path):
        """An unknown format version is refused"""
        cfg = tiny()
        path = save_checkpoint(tmp_path / "m.ckpt", cfg, MART(cfg).params)
        with zipfile.ZipFile(path) as archive:
            manifest = json.loads(archive.read("manifest.json"))
            payload = archive.read("params.bin")
        manifest["format_version"] = 99
        future = tmp_path / "future.ckpt"
        with zipfile.ZipFile(future, "w") as archive:
            archive.writestr("manifest.json", json.dumps(manifest))
            archive.writestr("params.bin", payload)
        with pytest.raises(VersionError):
            load_checkpoint(future)


class TestTrainer:
    """Training loop"""

    def test_rejects_unlabeled_scenes(self):
        """Training needs at least one scene, all with futures"""
        scene = tiny_scenes(1)[0]
        scene.fut = None
        with pytest.raises(DataError):
            Trainer(tiny(), [scene])
        with pytest.raises(DataError):
            Trainer(tiny(), [])

    def test_rejects_horizon_mismatch(self):
        """Scene horizons must match the model"""
        scenes = generate_synthetic(SynthConfig(num_scenes=1, agents_per_scene=3, groups_per_scene=1,
                                                t_p=5, t_f=3))
        with pytest.raises(DataError):
            Trainer(tiny(), scenes)

    def test_loss_decreases(self):
        """Repeated steps on one scene lower its loss"""
        cfg = tiny(precision="double", lr=1e-2, batch_size=1, epochs=10)
        trainer = Trainer(cfg, tiny_scenes(1))
        records = trainer.train()
        assert len(records) == 10
        assert len(trainer.step_losses) == 10
        assert trainer.step_losses[-1] < trainer.step_losses[0]

    def test_max_steps(self):
        """The step cap ends training mid-epoch"""
        trainer = Trainer(tiny(batch_size=2, epochs=10, max_steps=5), tiny_scenes(6))
        trainer.train()
        assert trainer.step == 5
        assert [r.steps for r in trainer.history] == [3, 2]

    def test_worker_count_does_not_change_results(self):
        """Parallel batches give the same history and parameters"""
        scenes = tiny_scenes(6)
        runs = []
        for workers in (1, 2):
            trainer = Trainer(tiny(batch_size=3, epochs=2, workers=workers), scenes)
            trainer.train()
            runs.append(trainer)
        assert [r.to_dict() for r in runs[0].history] == [r.to_dict() for r in runs[1].history]
        for name, value in runs[0].model.params.state_dict().items():
            assert np.array_equal(runs[1].model.params[name].data, value)

    def test_resume_matches_uninterrupted_run(self, tmp_path):
        """Two halves joined by a checkpoint equal one full run"""
        scenes = tiny_scenes(5)
        cfg = tiny(batch_size=2, epochs=4, lr=1e-2)

        full = Trainer(cfg, scenes)
        full.train()

        first = Trainer(cfg.replace(epochs=2), scenes)
        first.train(checkpoint_path=tmp_path / "half.ckpt")
        resumed = Trainer.from_checkpoint(load_checkpoint(tmp_path / "half.ckpt"), scenes, cfg=cfg)
        assert resumed.epoch == 2
        resumed.train()

        assert [r.to_dict() for r in resumed.history] == [r.to_dict() for r in full.history[2:]]
        for name, value in full.model.params.state_dict().items():
            assert np.array_equal(resumed.model.params[name].data, value)

    def test_periodic_checkpoints(self, tmp_path):
        """The last periodic checkpoint holds the final epoch and optimizer state"""
        trainer = Trainer(tiny(batch_size=3, epochs=3), tiny_scenes(3))
        trainer.train(checkpoint_path=tmp_path / "run.ckpt", checkpoint_every=1)
        checkpoint = load_checkpoint(tmp_path / "run.ckpt")
        assert checkpoint.epoch == 3
        assert checkpoint.step == 3
        assert checkpoint.optimizer_state["t"] == 3


class TestGradcheck:
    """End-to-end gradient check"""

    def test_tiny_model_passes(self):
        """Every parameter of the tiny model matches central differences; the STE adjoint is exact"""
        report = gradcheck()
        assert report.passed, report.failures
        assert report.checked == count_params(build_config(preset="tiny"))
        assert report.ste_error <= 1e-10
        assert {"node_init", "pair_init", "hyper_init", "prt", "hrt", "decoder"} <= set(report.group_errors)

    def test_reports_real_relative_errors(self):
        """Group errors are the measured relative errors, not zeros from the absolute floor"""
        report = gradcheck()
        assert 0.0 < report.worst_error <= report.tol
        assert report.group_errors["prt"] > 0.0
        assert report.group_errors["decoder"] > 0.0
        assert 0 < report.negligible < report.checked

    def test_floor_needs_both_sides_small(self):
        """Only entries where analytic and numeric values are both tiny are excused"""
        analytic = np.array([0.0, 1e-6, 1e-12, 0.5])
        numeric = np.array([3e-11, 1e-6 + 1e-10, 2e-9, 0.5])
        errors = _entry_errors(analytic, numeric, ABS_FLOOR)
        assert errors[0] == 0.0
        assert errors[1] == pytest.approx(1e-4, rel=1e-3)
        assert errors[2] > 0.1
        assert errors[3] == 0.0
        np.testing.assert_array_equal(negligible_entries(analytic, numeric, ABS_FLOOR),
                                      [True, False, False, False])

    def test_corrupted_gradient_is_named(self):
        """A corrupted adjoint fails and names its parameter"""
        name = MART(build_config(preset="tiny")).params.names()[0]

        def corrupt(grads):
            grads[name] = grads[name] + 1.0
            return grads

        report = gradcheck(corrupt=corrupt)
        assert not report.passed
        assert report.worst_param == name
        assert name in [failure["parameter"] for failure in report.failures]

    @pytest.mark.parametrize("variant", ["clipped_passthrough", "long_tailed"])
    def test_straight_through_variants(self, variant):
        """Every surrogate derivative matches its closed-form adjoint"""
        report = gradcheck(build_config(preset="tiny", overrides={"ste_variant": variant}), seed=1)
        assert report.passed, report.failures


class TestCounting:
    """Parameter and MAC counts"""

    def test_eth_parameter_count(self):
        """The ETH/UCY model has the published parameter count"""
        cfg = build_config(preset="eth_ucy")
        assert count_params(cfg) == ETH_PARAMS
        assert MART(cfg).num_parameters() == ETH_PARAMS

    def test_eth_breakdown(self):
        """Per-stage parameter counts of the ETH/UCY model"""
        breakdown = param_breakdown(build_config(preset="eth_ucy"))
        assert breakdown["node_init"] == 33024
        assert breakdown["age"] == 1
        assert breakdown["pair_init"] == 24768
        assert breakdown["hyper_init"] == 16576
        assert breakdown["prt"] == 4 * 103936
        assert breakdown["hrt"] == 4 * 87552
        assert breakdown["decoder"] == 20 * 34520

    def test_eth_macs(self):
        """Ten agents cost within a quarter of the published MACs"""
        cfg = build_config(preset="eth_ucy")
        macs = count_macs(cfg, 10)
        assert macs == ETH_MACS_10
        assert abs(macs - 43.3e6) / 43.3e6 < 0.25
        assert sum(mac_breakdown(cfg, 10).values()) == macs

    def test_macs_grow_quadratically_in_pairs(self):
        """Pair stages grow with N^2, per-agent stages with N"""
        cfg = build_config(preset="eth_ucy")
        stages_4, stages_8 = mac_breakdown(cfg, 4), mac_breakdown(cfg, 8)
        assert stages_8["age"] == 4 * stages_4["age"]
        assert stages_8["decoder"] == 2 * stages_4["decoder"]

    def test_invalid_agent_count(self):
        """A scene needs at least one agent"""
        with pytest.raises(ConfigError):
            count_macs(build_config(), 0)

    @pytest.mark.parametrize("encoder,params,macs", [
        ("pair_only", 1163936, 38871040),
        ("group_only", 1090209, 10918400),
        ("vanilla", 857312, 8560640),
    ])
    def test_encoder_ablations(self, encoder, params, macs):
        """Counts drop the stages of a disabled branch and match the declared parameters"""
        cfg = build_config(preset="eth_ucy", overrides={"encoder": encoder})
        assert count_params(cfg) == params
        assert MART(cfg).num_parameters() == params
        assert count_macs(cfg, 10) == macs
        assert sum(mac_breakdown(cfg, 10).values()) == macs

    def test_ablation_stages(self):
        """Only the stages of the enabled branches are listed"""
        cfg = build_config(preset="eth_ucy")
        assert list(mac_breakdown(cfg.replace(encoder="pair_only"), 4)) == [
            "node_init", "pair_init", "prt", "decoder"]
        assert list(mac_breakdown(cfg.replace(encoder="group_only"), 4)) == [
            "node_init", "age", "hyper_init", "hrt", "decoder"]
        assert list(mac_breakdown(cfg.replace(encoder="vanilla"), 4)) == ["node_init", "vanilla", "decoder"]


@functools.lru_cache(maxsize=None)
def group_learning_run():
    """Train the mid preset once on the group-learning scenario; shared by the acceptance checks"""
    train_scenes, held_out = scenario_split("group_learning")
    trainer = Trainer(build_config(preset="mid"), train_scenes)
    trainer.train()
    return trainer, held_out


@pytest.mark.slow
class TestSyntheticAcceptance:
    """Desk-scale training run on planted-group scenes"""

    def test_beats_constant_velocity(self):
        """Joint minADE on held-out scenes is at least 30% below constant-velocity extrapolation"""
        trainer, held_out = group_learning_run()
        model_report = evaluate(trainer.model, held_out, mode="joint")
        baseline = constant_velocity_report(held_out, trainer.cfg.t_f, mode="joint")
        assert model_report.min_ade <= 0.7 * baseline.min_ade

    def test_recovers_planted_groups(self):
        """The same trained model's incidence matches noise-free planted groups"""
        trainer, _ = group_learning_run()
        _, recovery_scenes = scenario_split("group_recovery")
        scores = [group_recovery(trainer.model.groups(scene), scene.group_truth) for scene in recovery_scenes]
        assert np.mean([s["precision"] for s in scores]) >= 0.9
        assert np.mean([s["recall"] for s in scores]) >= 0.9


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
