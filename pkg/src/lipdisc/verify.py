"""Empirical checks of the discrete constant formulas against the maps.

The estimators measure the nonlinear part F_T alone, matching the
per-part structure of the discrete family (the linear part a_d is
handled exactly through its singular value); the full-map constant is
also reported for information.  A bound passes when

    formula >= empirical - tol_verify,
    tol_verify = 1e-9 + 1e-6 |formula|,

absolute plus relative slack that absorbs floating-point noise without
hiding real violations.  Witness pairs are always included so a
violation can be reproduced from the report alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from . import bounds as bnd
from .constants import (
    ConstantEstimates,
    SamplingConfig,
    estimate_all,
    sample_pairs,
    sup_pair_quotient,
)
from .discretize import DiscreteModel, build_taylor_model, exact_step
from .system import SystemSpec


def verify_tolerance(formula: float) -> float:
    return 1e-9 + 1e-6 * abs(formula)


def empirical_lipschitz(
    mdl: DiscreteModel, s: SystemSpec, cfg: SamplingConfig, pairs=None
) -> tuple[float, dict]:
    """Empirical sup of ||F_T(x1,u) - F_T(x2,u)|| / ||x1 - x2||."""
    return sup_pair_quotient(mdl.f_t_batch, s, cfg, one_sided=False, pairs=pairs)


def empirical_one_sided(
    mdl: DiscreteModel, s: SystemSpec, cfg: SamplingConfig, pairs=None
) -> tuple[float, dict]:
    """Empirical sup of <F_T(x1,u) - F_T(x2,u), x1 - x2> / ||x1 - x2||^2."""
    return sup_pair_quotient(mdl.f_t_batch, s, cfg, one_sided=True, pairs=pairs)


def empirical_gamma_c(s: SystemSpec, cfg: SamplingConfig, pairs=None) -> tuple[float, dict]:
    """Pair-quotient Lipschitz estimate of f itself, on the same sample
    set the model estimators use (the order-1 map scales it by T)."""
    return sup_pair_quotient(s.eval_f_batch, s, cfg, one_sided=False, pairs=pairs)


def empirical_full_map(
    mdl: DiscreteModel, s: SystemSpec, cfg: SamplingConfig, pairs=None
) -> float:
    """Two-sided quotient of the complete map a_d x + F_T (informational)."""

    def full(x, u):
        return x @ mdl.a_d.T + mdl.f_t_batch(x, u)

    value, _ = sup_pair_quotient(full, s, cfg, one_sided=False, pairs=pairs)
    return value


@dataclass
class VerificationReport:
    system: str
    order: int
    sampling_time: float
    constants: ConstantEstimates
    formula_gamma_d: float
    formula_rho_d: float | None
    empirical_gamma_d: float
    empirical_gamma_witness: dict
    empirical_rho_d: float
    empirical_rho_witness: dict
    full_map_gamma_d: float
    gamma_margin: float
    rho_margin: float | None
    gamma_pass: bool
    rho_pass: bool | None
    gamma_tol: float
    rho_tol: float | None
    config: SamplingConfig
    timestamp: str

    @property
    def all_passed(self) -> bool:
        return self.gamma_pass and (self.rho_pass is not False)

    def to_jsonable(self) -> dict:
        return {
            "system": self.system,
            "order": self.order,
            "T": self.sampling_time,
            "constants": self.constants.to_jsonable(),
            "bounds": {"gamma_d": self.formula_gamma_d, "rho_d": self.formula_rho_d},
            "empirical": {
                "gamma_d": {
                    "value": self.empirical_gamma_d,
                    "witness": self.empirical_gamma_witness,
                },
                "rho_d": {
                    "value": self.empirical_rho_d,
                    "witness": self.empirical_rho_witness,
                },
                "full_map_gamma_d": self.full_map_gamma_d,
            },
            "margins": {"gamma_d": self.gamma_margin, "rho_d": self.rho_margin},
            "tolerances": {"gamma_d": self.gamma_tol, "rho_d": self.rho_tol},
            "passed": {
                "gamma_d": self.gamma_pass,
                "rho_d": self.rho_pass,
                "all": self.all_passed,
            },
            "config": self.config.to_jsonable(),
            "timestamp": self.timestamp,
        }


def verify_bounds(
    s: SystemSpec,
    order: int,
    cfg: SamplingConfig,
    constants: ConstantEstimates | None = None,
) -> VerificationReport:
    """Full pipeline: constants, formula bounds, empirical constants,
    margins and pass flags for one order."""
    if constants is None:
        constants = estimate_all(s, cfg)
    t = s.sampling_time
    result = bnd.evaluate_bounds(order, t, constants)
    mdl = build_taylor_model(s, order)
    pairs = sample_pairs(s, cfg)
    emp_gamma, gamma_wit = empirical_lipschitz(mdl, s, cfg, pairs=pairs)
    emp_rho, rho_wit = empirical_one_sided(mdl, s, cfg, pairs=pairs)
    full_map = empirical_full_map(mdl, s, cfg, pairs=pairs)

    gamma_tol = verify_tolerance(result.gamma_d)
    gamma_margin = result.gamma_d - emp_gamma
    gamma_pass = gamma_margin >= -gamma_tol
    if result.rho_d is None:
        rho_tol = rho_margin = rho_pass = None
    else:
        rho_tol = verify_tolerance(result.rho_d)
        rho_margin = result.rho_d - emp_rho
        rho_pass = rho_margin >= -rho_tol

    return VerificationReport(
        system=s.name,
        order=order,
        sampling_time=t,
        constants=constants,
        formula_gamma_d=result.gamma_d,
        formula_rho_d=result.rho_d,
        empirical_gamma_d=emp_gamma,
        empirical_gamma_witness=gamma_wit,
        empirical_rho_d=emp_rho,
        empirical_rho_witness=rho_wit,
        full_map_gamma_d=full_map,
        gamma_margin=gamma_margin,
        rho_margin=rho_margin,
        gamma_pass=gamma_pass,
        rho_pass=rho_pass,
        gamma_tol=gamma_tol,
        rho_tol=rho_tol,
        config=cfg,
        timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )


# ---------------------------------------------------------------------------
# convergence study

@dataclass
class ConvergenceStudy:
    t_values: list[float]
    errors: dict  # order -> list of max local errors, aligned with t_values
    slopes: dict  # order -> fitted slope of log error vs log T

    def to_jsonable(self) -> dict:
        return {
            "t_values": list(self.t_values),
            "orders": {
                str(k): {"max_local_errors": self.errors[k], "slope": self.slopes[k]}
                for k in sorted(self.errors)
            },
        }


def convergence_study(
    s: SystemSpec,
    orders,
    t_values,
    cfg: SamplingConfig | None = None,
    n_points: int = 25,
    integrator_tol: float = 1e-12,
) -> ConvergenceStudy:
    """Fit the local truncation error order of each Taylor map.

    For each T, the max over a seeded point sample of
    ||exact_step - step_k|| is recorded; the least-squares slope of
    log error against log T should be close to k + 1.  Points are drawn
    from the central half of the region (and inputs from U) so the
    series stays well inside its convergence zone.
    """
    t_values = [float(t) for t in t_values]
    if len(t_values) < 3:
        raise ValueError("need at least 3 sampling times")
    orders = sorted(set(int(k) for k in orders))
    seed = cfg.seed if cfg is not None else 42
    rng = np.random.default_rng(seed)
    inner = s.region.scaled(0.5)
    xs = inner.lower + rng.random((n_points, s.n)) * inner.width
    us = s.input_region.lower + rng.random((n_points, s.m)) * s.input_region.width

    errors: dict[int, list[float]] = {k: [] for k in orders}
    for t in t_values:
        s_t = s.with_sampling_time(t)
        models = {k: build_taylor_model(s_t, k) for k in orders}
        exact = np.stack(
            [exact_step(s_t, xs[i], us[i], tol=integrator_tol) for i in range(n_points)]
        )
        for k in orders:
            approx = np.stack([models[k].step(xs[i], us[i]) for i in range(n_points)])
            gap = np.max(np.linalg.norm(exact - approx, axis=1))
            errors[k].append(float(max(gap, 1e-300)))

    log_t = np.log(np.asarray(t_values))
    slopes = {}
    for k in orders:
        slope, _ = np.polyfit(log_t, np.log(np.asarray(errors[k])), 1)
        slopes[k] = float(slope)
    return ConvergenceStudy(t_values=t_values, errors=errors, slopes=slopes)
