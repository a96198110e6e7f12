"""
Unit tests for the decoder, the variety loss and best-of-K metrics
"""
import itertools

import pytest
import numpy as np
import sys
import os
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.core.autodiff import Tape, Tensor, backprop
from src.data.inputs import constant_velocity
from src.evaluation.baselines import constant_velocity_report
from src.evaluation.metrics import aggregate_reports, min_ade_fde
from src.model.decoder import declare_decoder_params, decode
from src.model.marte import EncoderOutput
from src.model.loss import variety_loss
from src.core.parameters import ParameterStore
from src.core.scene import Scene
from src.utils.config import build_config
from src.utils.errors import ConfigError, DataError, DimensionError


def _instance(rng):
    k, n, t = rng.integers(1, 6), rng.integers(1, 5), rng.integers(1, 6)
    return rng.normal(size=(k, n, t, 2)), rng.normal(size=(n, t, 2))


def _brute_force_loss(preds, gt, reduction):
    k, n, t, _ = preds.shape
    dist = [[[np.hypot(*(preds[h, a, s] - gt[a, s])) for s in range(t)] for a in range(n)] for h in range(k)]
    dist = np.array(dist)
    if reduction == "per_point":
        return np.mean([min(dist[h, a, s] for h in range(k)) for a in range(n) for s in range(t)])
    return min(dist[h].mean() for h in range(k))


def _brute_force_metrics(preds, gt, mode):
    k = preds.shape[0]
    dist = np.sqrt(((preds - gt[None]) ** 2).sum(axis=-1))
    if mode == "marginal":
        ade = np.mean([min(dist[h, a].mean() for h in range(k)) for a in range(gt.shape[0])])
        fde = np.mean([min(dist[h, a, -1] for h in range(k)) for a in range(gt.shape[0])])
    else:
        ade = min(dist[h].mean() for h in range(k))
        fde = min(dist[h, :, -1].mean() for h in range(k))
    return ade, fde


class TestDecoder:
    """Per-head MLP declarations"""

    def test_head_dimensions(self):
        """Every head maps 3 d_n to T_f x 2 through d_D and d_D / 2"""
        cfg = build_config(preset="eth_ucy")
        store = ParameterStore()
        declare_decoder_params(store, cfg)
        assert store["decoder.0.0.weight"].shape == (3 * 64, 128)
        assert store["decoder.0.1.weight"].shape == (128, 64)
        assert store["decoder.19.2.weight"].shape == (64, 24)
        assert store.num_elements() == 20 * 34520


class TestDecode:
    """Forward pass of the per-head MLPs on the concatenated encoder features"""

    @staticmethod
    def _decoder(**changes):
        cfg = build_config(preset="tiny", overrides=changes)
        store = ParameterStore(dtype=np.float64, seed=0)
        declare_decoder_params(store, cfg)
        return cfg, store

    @staticmethod
    def _encoded(n0, n_pair, n_group):
        return EncoderOutput(n_pair=Tensor(n_pair), n_group=Tensor(n_group), group_incidence=None,
                             n0=Tensor(n0))

    def test_zero_in_zero_out(self):
        """Zero features through zero weights give zero trajectories"""
        cfg, params = self._decoder()
        for name in params.names():
            params[name].data[...] = 0.0
        zeros = np.zeros((3, cfg.d_n))
        enc = self._encoded(zeros, zeros, zeros)
        out = decode(enc, enc.n0, params, cfg.k, cfg.t_f)
        assert out.numpy().shape == (cfg.k, 3, cfg.t_f, 2)
        np.testing.assert_array_equal(out.numpy(), 0.0)

    def test_concat_order(self):
        """n0, n_pair and n_group fill input rows [0, d_n), [d_n, 2 d_n), [2 d_n, 3 d_n)"""
        cfg, params = self._decoder()
        d_n = cfg.d_n
        for name in params.names():
            params[name].data[...] = 0.0
        for head in range(cfg.k):
            # output x of step 0 reads back (input row + 1)
            params[f"decoder.{head}.0.weight"].data[:, 0] = np.arange(1, 3 * d_n + 1)
            params[f"decoder.{head}.1.weight"].data[0, 0] = 1.0
            params[f"decoder.{head}.2.weight"].data[0, 0] = 1.0
        n0, n_pair, n_group = np.zeros((3, d_n)), np.zeros((3, d_n)), np.zeros((3, d_n))
        n0[0, 0] = n_pair[1, 0] = n_group[2, 0] = 1.0
        enc = self._encoded(n0, n_pair, n_group)
        out = decode(enc, enc.n0, params, cfg.k, cfg.t_f).numpy()
        for head in range(cfg.k):
            np.testing.assert_array_equal(out[head, :, 0, 0], [1.0, 1.0 + d_n, 1.0 + 2 * d_n])
        np.testing.assert_array_equal(out[:, :, 1:], 0.0)
        np.testing.assert_array_equal(out[:, :, 0, 1], 0.0)


class TestVarietyLoss:
    """Best-of-K training loss"""

    @pytest.mark.parametrize("reduction", ["per_point", "per_scene"])
    def test_matches_enumeration(self, reduction):
        """Agrees with brute-force enumeration over heads"""
        rng = np.random.default_rng(0)
        for _ in range(200):
            preds, gt = _instance(rng)
            value = variety_loss(Tensor(preds), gt, reduction).item()
            assert value == pytest.approx(_brute_force_loss(preds, gt, reduction), abs=1e-10)

    def test_reductions_differ(self):
        """Minimum inside the sums is never larger than outside"""
        rng = np.random.default_rng(1)
        for _ in range(20):
            preds, gt = _instance(rng)
            inner = variety_loss(Tensor(preds), gt, "per_point").item()
            outer = variety_loss(Tensor(preds), gt, "per_scene").item()
            assert inner <= outer + 1e-12

    def test_only_best_head_gets_gradient(self):
        """Only the winning head receives an adjoint"""
        gt = np.zeros((2, 3, 2))
        preds = Tensor(np.stack([np.ones((2, 3, 2)), np.full((2, 3, 2), 0.1), np.full((2, 3, 2), 2.0)]),
                       requires_grad=True)
        with Tape() as tape:
            loss = variety_loss(preds, gt, "per_scene")
        backprop(tape, loss)
        assert np.all(preds.grad[0] == 0) and np.all(preds.grad[2] == 0)
        assert np.all(preds.grad[1] > 0)

    def test_more_heads_never_hurt(self):
        """Appending heads never raises either reduction"""
        rng = np.random.default_rng(8)
        preds, gt = rng.normal(size=(6, 3, 5, 2)), rng.normal(size=(3, 5, 2))
        for reduction in ("per_scene", "per_point"):
            values = [variety_loss(Tensor(preds[:k]), gt, reduction).item() for k in range(1, 7)]
            assert all(a >= b for a, b in zip(values, values[1:]))

    def test_exact_prediction(self):
        """A head equal to the ground truth gives zero loss"""
        gt = np.random.default_rng(2).normal(size=(3, 4, 2))
        preds = np.stack([gt + 1.0, gt])
        assert variety_loss(Tensor(preds), gt, "per_point").item() == 0.0

    def test_errors(self):
        """Mismatched shapes and unknown reductions are rejected"""
        with pytest.raises(DimensionError):
            variety_loss(Tensor(np.zeros((2, 3, 4, 2))), np.zeros((3, 5, 2)))
        with pytest.raises(ConfigError):
            variety_loss(Tensor(np.zeros((2, 3, 4, 2))), np.zeros((3, 4, 2)), "per_agent")


class TestMetrics:
    """minADE_k / minFDE_k"""

    @pytest.mark.parametrize("mode", ["marginal", "joint"])
    def test_matches_enumeration(self, mode):
        """Agrees with brute-force enumeration over heads"""
        rng = np.random.default_rng(3)
        for _ in range(200):
            preds, gt = _instance(rng)
            report = min_ade_fde(preds, gt, mode=mode)
            ade, fde = _brute_force_metrics(preds, gt, mode)
            assert report.min_ade == pytest.approx(ade, abs=1e-10)
            assert report.min_fde == pytest.approx(fde, abs=1e-10)

    def test_three_four_five(self):
        """A constant (0.3, 0.4) offset from the ground truth scores ADE = FDE = 0.5"""
        gt = np.arange(8, dtype=np.float64)[:, None] * np.array([1.0, 0.5])
        preds = (gt + np.array([0.3, 0.4]))[None, None]
        report = min_ade_fde(preds, gt[None])
        assert report.min_ade == pytest.approx(0.5, abs=1e-12)
        assert report.min_fde == pytest.approx(0.5, abs=1e-12)

    def test_k_one_is_plain_ade(self):
        """k = 1 scores the first head alone"""
        rng = np.random.default_rng(4)
        preds, gt = rng.normal(size=(5, 3, 6, 2)), rng.normal(size=(3, 6, 2))
        report = min_ade_fde(preds, gt, k=1)
        dist = np.linalg.norm(preds[0] - gt, axis=-1)
        assert report.min_ade == pytest.approx(dist.mean())
        assert report.min_fde == pytest.approx(dist[:, -1].mean())

    def test_marginal_not_above_joint(self):
        """Per-agent selection never scores worse than per-scene selection"""
        rng = np.random.default_rng(5)
        for _ in range(20):
            preds, gt = _instance(rng)
            marginal = min_ade_fde(preds, gt, mode="marginal")
            joint = min_ade_fde(preds, gt, mode="joint")
            assert marginal.min_ade <= joint.min_ade + 1e-12

    def test_subset_of_heads(self):
        """Considering fewer heads never improves the score"""
        rng = np.random.default_rng(6)
        preds, gt = rng.normal(size=(6, 2, 4, 2)), rng.normal(size=(2, 4, 2))
        values = [min_ade_fde(preds, gt, k=k).min_ade for k in range(1, 7)]
        assert all(a >= b for a, b in zip(values, values[1:]))

    def test_k_out_of_range(self):
        """k must lie between 1 and the number of heads"""
        preds, gt = np.zeros((3, 2, 4, 2)), np.zeros((2, 4, 2))
        with pytest.raises(ConfigError):
            min_ade_fde(preds, gt, k=4)
        with pytest.raises(ConfigError):
            min_ade_fde(preds, gt, k=0)

    def test_empty_aggregate(self):
        """Aggregating no reports is an error"""
        with pytest.raises(DataError):
            aggregate_reports([])

    def test_aggregate_is_scene_mean(self):
        """The aggregate is the mean of the per-scene scores"""
        rng = np.random.default_rng(7)
        preds = [rng.normal(size=(2, 2, 3, 2)) for _ in range(3)]
        gts = [rng.normal(size=(2, 3, 2)) for _ in range(3)]
        reports = [min_ade_fde(p, g) for p, g in zip(preds, gts)]
        total = aggregate_reports(reports)
        assert total.min_ade == pytest.approx(np.mean([r.min_ade for r in reports]))


class TestConstantVelocity:
    """Reference predictor"""

    def test_extrapolation(self):
        """The last observed step is repeated"""
        obs = np.array([[[0.0, 0.0], [1.0, 0.5]]])
        pred = constant_velocity(obs, 3)
        np.testing.assert_allclose(pred[0], [[2.0, 1.0], [3.0, 1.5], [4.0, 2.0]])

    def test_perfect_on_linear_motion(self):
        """Straight constant-speed motion is predicted exactly"""
        track = np.arange(10, dtype=np.float64)[:, None] * np.array([0.3, -0.2])
        scene = Scene(scene_id="line", obs=track[None, :4], fut=track[None, 4:])
        report = constant_velocity_report([scene], 6)
        assert report.min_ade == pytest.approx(0.0, abs=1e-12)
        assert report.k == 1


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
