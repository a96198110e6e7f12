"""
End-to-end gradient check against central finite differences

The group estimator's unit step has no derivative, so the check is split:

* every parameter is compared with G frozen at its current estimate: the
  reverse sweep detaches G, the finite-difference evaluations reuse the same G
  as a constant, so a perturbation never flips a membership;
* the straight-through adjoint of the step is compared with its closed
  form, dL/dA = dL/dG * ste(A - Theta) and dL/draw = -sum(dL/dA) (1 - Theta^2).
"""
import logging
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from ..core.autodiff import Tape, backprop
from ..core.finite_diff import finite_diff_grad, relative_error
from ..core.scene import Scene
from ..model.age import THRESHOLD_PARAM, ste_grad
from ..model.loss import variety_loss
from ..model.mart import MART
from ..utils.config import build_config
from ..utils.log import log_fields

logger = logging.getLogger(__name__)

ABS_FLOOR = 1e-9
STE_TOLERANCE = 1e-10


@dataclass
class GradcheckReport:
    passed: bool
    tol: float
    eps: float
    group_errors: dict = field(default_factory=dict)    # group -> max relative error
    worst_param: str = None
    worst_error: float = 0.0
    ste_error: float = 0.0
    checked: int = 0
    negligible: int = 0                                  # entries where both sides are below abs_floor
    failures: list = field(default_factory=list)

    def to_dict(self):
        return {"passed": self.passed, "tol": self.tol, "eps": self.eps,
                "group_errors": dict(self.group_errors), "worst_param": self.worst_param,
                "worst_error": self.worst_error, "ste_error": self.ste_error,
                "checked": self.checked, "negligible": self.negligible, "failures": list(self.failures)}


def random_scene(rng, n_agents, t_p, t_f, scene_id="gradcheck"):
    """Random-walk scene with unit-scale steps"""
    steps = rng.normal(0.0, 0.5, size=(n_agents, t_p + t_f, 2)) + rng.normal(0.0, 0.5, size=(n_agents, 1, 2))
    positions = rng.normal(0.0, 2.0, size=(n_agents, 1, 2)) + np.cumsum(steps, axis=1)
    return Scene(scene_id=scene_id, obs=positions[:, :t_p], fut=positions[:, t_p:])


def negligible_entries(analytic, numeric, abs_floor):
    """Entries where both the analytic and the numeric gradient are at most abs_floor in size"""
    return (np.abs(np.asarray(analytic)) <= abs_floor) & (np.abs(np.nan_to_num(numeric)) <= abs_floor)


def _entry_errors(analytic, numeric, abs_floor):
    """Relative error per entry, zeroed only where both sides are negligible"""
    rel = relative_error(analytic, numeric)
    return np.where(negligible_entries(analytic, numeric, abs_floor), 0.0, rel)


def check_ste_adjoint(model, scene):
    """
    Largest relative deviation of the straight-through adjoints from their closed form

    Returns:
        float, 0.0 when exact
    """
    with Tape() as tape:
        preds, enc = model.forward(scene)
        loss = variety_loss(preds, scene.fut, model.cfg.loss_reduction)
    grads = backprop(tape, loss, model.params)

    groups = enc.group_incidence
    if groups is None:
        return 0.0
    upstream = groups.tensor.grad if groups.tensor.grad is not None else np.zeros(groups.tensor.shape)
    theta = float(groups.threshold.data)
    local = upstream * ste_grad(groups.affinity.data - theta, model.cfg.ste_variant)
    expected_affinity = local
    expected_raw = -np.sum(local) * (1.0 - theta ** 2)

    got_affinity = groups.affinity.grad if groups.affinity.grad is not None else np.zeros(groups.affinity.shape)
    got_raw = float(np.asarray(grads[THRESHOLD_PARAM]))
    errors = [
        np.max(_entry_errors(got_affinity, expected_affinity, 0.0), initial=0.0),
        float(_entry_errors(np.array([got_raw]), np.array([expected_raw]), 0.0)[0]),
    ]
    return float(max(errors))


def gradcheck(cfg=None, seed=0, eps=1e-5, tol=1e-4, n_agents=4, scene=None, corrupt=None,
              abs_floor=ABS_FLOOR):
    """
    Compare reverse-mode gradients with central differences in double precision

    Args:
        cfg: TrainConfig (defaults to the 'tiny' preset); run in double precision
        seed: parameter and scene seed
        eps: finite-difference step
        tol: maximum accepted relative error
        n_agents: agents in the generated scene
        scene: optional Scene instead of a generated one
        corrupt: optional callable(grads) -> grads applied to the analytic
            gradients before comparison
        abs_floor: entries whose analytic and numeric values are both at most
            this large pass regardless of their relative error (structurally
            zero gradients such as attention key biases)

    Returns:
        GradcheckReport (``passed`` False names the worst parameter)
    """
    cfg = cfg if cfg is not None else build_config(preset="tiny")
    cfg = cfg.replace(precision="double", seed=seed)
    rng = np.random.default_rng(seed)
    scene = scene if scene is not None else random_scene(rng, n_agents, cfg.t_p, cfg.t_f)
    model = MART(cfg)

    _, analytic = model.loss_and_grads(scene, detach_groups=True)
    if corrupt is not None:
        analytic = corrupt(OrderedDict((k, v.copy()) for k, v in analytic.items()))

    frozen = model.encode(scene).group_incidence
    frozen = frozen.matrix if frozen is not None else None

    def frozen_loss(params):
        return model.loss(scene, fixed_groups=frozen)

    numeric = finite_diff_grad(frozen_loss, model.params, eps=eps)

    report = GradcheckReport(passed=True, tol=tol, eps=eps)
    for name, num in numeric.items():
        err = _entry_errors(analytic[name], num, abs_floor)
        worst = float(np.max(err, initial=0.0))
        group = model.params.group_of(name)
        report.group_errors[group] = max(report.group_errors.get(group, 0.0), worst)
        report.checked += int(np.size(num))
        report.negligible += int(np.sum(negligible_entries(analytic[name], num, abs_floor)))
        if worst > report.worst_error or report.worst_param is None:
            report.worst_error, report.worst_param = worst, name
        if worst > tol:
            report.failures.append({"parameter": name, "error": worst})

    report.ste_error = check_ste_adjoint(model, scene)
    if report.ste_error > STE_TOLERANCE:
        report.failures.append({"parameter": THRESHOLD_PARAM, "error": report.ste_error,
                                "check": "straight-through adjoint"})
    report.passed = not report.failures

    level = logging.INFO if report.passed else logging.WARNING
    log_fields(logger, "gradcheck", level=level, passed=report.passed, worst_param=report.worst_param,
               worst_error=report.worst_error, ste_error=report.ste_error, checked=report.checked,
               negligible=report.negligible)
    return report
