#!/usr/bin/env python
"""
Validation script for the multiscale relational transformer

Runs the fast acceptance checks (shapes, gradients, counts, checkpoints)
without any training data. Run this to verify the installation.
"""
import sys
import os
import tempfile
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from src.data.synthetic import SynthConfig, generate_synthetic
from src.evaluation.baselines import constant_velocity_report
from src.model.age import group_recovery
from src.model.mart import MART
from src.training.checkpoint import load_checkpoint, save_checkpoint
from src.training.counting import count_macs, count_params
from src.training.gradcheck import gradcheck
from src.utils.config import build_config
import numpy as np


def print_header(text):
    """Print section header"""
    print("\n" + "=" * 60)
    print(f"  {text}")
    print("=" * 60)


def test_forward_shapes():
    """One forward pass of the tiny model"""
    print_header("Testing Forward Pass")

    cfg = build_config(preset="tiny")
    model = MART(cfg)
    scene = generate_synthetic(SynthConfig(num_scenes=1, agents_per_scene=5, groups_per_scene=2,
                                           t_p=cfg.t_p, t_f=cfg.t_f))[0]
    preds = model.predict(scene)
    assert preds.shape == (cfg.k, 5, cfg.t_f, 2), "Predictions should be (K, N, T_f, 2)"
    print(f"✓ Predictions: {preds.shape}")

    G = model.groups(scene)
    assert np.all(np.diag(G) == 1), "Every agent should belong to its own hyperedge"
    print(f"✓ Group incidence: {int(G.sum())} memberships over {G.size} pairs")
    print(f"✓ Recovery on planted groups: {group_recovery(G, scene.group_truth)['precision']:.2f} precision")


def test_gradients():
    """Finite-difference gradient check"""
    print_header("Testing Gradients")

    report = gradcheck()
    for group, error in report.group_errors.items():
        print(f"  - {group:12} max relative error {error:.2e}")
    assert report.passed, f"Gradient check failed at {report.worst_param}"
    print(f"✓ {report.checked} entries checked, straight-through error {report.ste_error:.1e}")


def test_counts():
    """Parameter and MAC counts of the pedestrian configuration"""
    print_header("Testing Model Size")

    cfg = build_config(preset="eth_ucy")
    params = count_params(cfg)
    macs = count_macs(cfg, 10)
    assert params == 1530721, f"Unexpected parameter count {params}"
    print(f"✓ Parameters: {params:,}")
    assert abs(macs - 43.3e6) / 43.3e6 < 0.25, f"MAC count {macs} outside expected range"
    print(f"✓ MACs for 10 agents: {macs / 1e6:.1f}M")


def test_checkpoint():
    """Checkpoint round trip"""
    print_header("Testing Checkpoints")

    cfg = build_config(preset="tiny", overrides={"precision": "single"})
    model = MART(cfg)
    with tempfile.TemporaryDirectory() as tmp:
        path = save_checkpoint(os.path.join(tmp, "model.ckpt"), cfg, model.params)
        restored = load_checkpoint(path).build_model()
    for name, value in model.params.state_dict().items():
        assert np.array_equal(restored.params[name].data, value), f"{name} changed on reload"
    print(f"✓ {len(model.params)} parameter arrays restored bit-exactly")


def test_baseline():
    """Constant-velocity floor on synthetic scenes"""
    print_header("Testing Baseline")

    scenes = generate_synthetic(SynthConfig(num_scenes=20, seed=1))
    report = constant_velocity_report(scenes, scenes[0].t_f, mode="joint")
    assert np.isfinite(report.min_ade), "Baseline metrics should be finite"
    print(f"✓ Constant velocity: minADE {report.min_ade:.3f} m, minFDE {report.min_fde:.3f} m")


def run_all_tests():
    """Run all validation tests"""
    print("\n" + "=" * 60)
    print("  MULTISCALE RELATIONAL TRANSFORMER - VALIDATION SUITE")
    print("=" * 60)

    try:
        test_forward_shapes()
        test_gradients()
        test_counts()
        test_checkpoint()
        test_baseline()

        print("\n" + "=" * 60)
        print("  ✓ ALL TESTS PASSED!")
        print("=" * 60)
        print("\nNext steps:")
        print("  1. Generate scenes: mart synth --scenario group_learning --out scenes.jsonl")
        print("  2. Train: mart train --data scenes.jsonl --out model.ckpt --preset mid")
        print("  3. Evaluate: mart eval --data scenes.jsonl --checkpoint model.ckpt")
        print("\n")

        return True

    except AssertionError as e:
        print(f"\n✗ TEST FAILED: {e}")
        return False
    except Exception as e:
        print(f"\n✗ ERROR: {e}")
        import traceback
        traceback.print_exc()
        return False


if __name__ == "__main__":
    success = run_all_tests()
    sys.exit(0 if success else 1)
