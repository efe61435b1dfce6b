"""Region estimates of the constants the discrete bound formulas consume.

Over the box D x U the estimators measure

  gamma_c     sup of the induced 2-norm of df/dx        (Lipschitz constant)
  rho_c       sup of <f(x1,u)-f(x2,u), x1-x2>/||x1-x2||^2   (one-sided)
  beta        sup of the order-3 tensor norm surrogate of d^2 f/dx^2
  big_m       sup of ||f(x, u)||
  sigma_bar_a max singular value of A

All estimates are empirical suprema: deterministic lower bounds on the
true values.  gamma_c, beta, big_m use a uniform grid (gamma_c refined
by a coordinate-descent polish); rho_c uses seeded random pairs plus
near-coincident pairs that capture the local limit of the quotient.
Sample evaluation may be chunked across threads (LIPDISC_THREADS); the
reduction is a max, so results are bit-identical for a fixed seed
regardless of worker count.
"""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .expr import ExprError
from .linalg import NumericalError, max_singular_value, sym_max_eig, tensor3_norm_surrogate
from .system import SystemSpec

_GRID_CAP = 1_000_000  # total grid points across all axes
_PAIR_EPS = 1e-5  # offset of near-coincident pairs
_MAX_FAIL_FRACTION = 0.1


@dataclass(frozen=True)
class SamplingConfig:
    grid_per_axis: int = 21
    pair_budget: int = 20_000
    seed: int = 42
    polish_iters: int = 40

    def __post_init__(self):
        if self.grid_per_axis < 2:
            raise ValueError("grid_per_axis must be >= 2")
        if self.pair_budget < 1000:
            raise ValueError("pair_budget must be >= 1000")
        if self.polish_iters < 0:
            raise ValueError("polish_iters must be >= 0")

    def to_jsonable(self) -> dict:
        return {
            "grid_per_axis": self.grid_per_axis,
            "pair_budget": self.pair_budget,
            "seed": self.seed,
            "polish_iters": self.polish_iters,
        }


@dataclass
class ConstantEstimates:
    gamma_c: float
    rho_c: float
    beta: float
    big_m: float
    sigma_bar_a: float
    witnesses: dict = field(default_factory=dict)
    config: SamplingConfig | None = None

    def to_jsonable(self) -> dict:
        out = {
            "gamma_c": self.gamma_c,
            "rho_c": self.rho_c,
            "beta": self.beta,
            "big_m": self.big_m,
            "sigma_bar_a": self.sigma_bar_a,
            "witnesses": self.witnesses,
        }
        if self.config is not None:
            out["sample_budget"] = self.config.to_jsonable()
        return out


def worker_count() -> int:
    """Parallelism cap from LIPDISC_THREADS; defaults to 1."""
    raw = os.environ.get("LIPDISC_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _chunk_map(fn, arrays: tuple[np.ndarray, ...], out_width: tuple[int, ...]):
    """Apply a row-batched function in deterministic thread chunks."""
    total = arrays[0].shape[0]
    workers = worker_count()
    if workers <= 1 or total < 2 * workers:
        return fn(*arrays)
    out = np.empty((total,) + out_width)
    chunks = np.array_split(np.arange(total), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [
            (idx, pool.submit(fn, *(a[idx] for a in arrays))) for idx in chunks if idx.size
        ]
        for idx, fut in futures:
            out[idx] = fut.result()
    return out


# ---------------------------------------------------------------------------
# sample generation

def _domain_box(s: SystemSpec) -> tuple[np.ndarray, np.ndarray]:
    lower = np.concatenate([s.region.lower, s.input_region.lower])
    upper = np.concatenate([s.region.upper, s.input_region.upper])
    return lower, upper


def _effective_grid(dims: int, g: int) -> int:
    while g > 2 and g**dims > _GRID_CAP:
        g -= 1
    return g


def grid_points(s: SystemSpec, cfg: SamplingConfig) -> np.ndarray:
    """Uniform per-axis mesh over D x U including endpoints, shape (P, n+m).

    The per-axis count is reduced if needed so the total stays under 1e6.
    """
    lower, upper = _domain_box(s)
    dims = lower.shape[0]
    g = _effective_grid(dims, cfg.grid_per_axis)
    axes = [np.linspace(lower[d], upper[d], g) for d in range(dims)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


@dataclass(frozen=True)
class PairSample:
    """Point pairs (x1, x2) sharing an input u, for quotient suprema."""

    x1: np.ndarray
    x2: np.ndarray
    u: np.ndarray


def sample_pairs(s: SystemSpec, cfg: SamplingConfig) -> PairSample:
    """Deterministic pair sample on D with shared inputs from U.

    Three families: independent uniform pairs, near-coincident pairs
    x2 = x1 + eps*v with random unit v (the quotient limit lives there),
    and a few deterministic probes at the region center and pulled-in
    corners along extremal directions of the Jacobian.  The family sizes
    split the pair budget roughly in half; probes are a small extra.
    """
    rng = np.random.default_rng(cfg.seed)
    low, width = s.region.lower, s.region.width
    ulow, uwidth = s.input_region.lower, s.input_region.width
    n, m = s.n, s.m

    n_coincident = cfg.pair_budget // 2
    n_independent = cfg.pair_budget - n_coincident

    x1_list = [low + rng.random((n_independent, n)) * width]
    x2_list = [low + rng.random((n_independent, n)) * width]
    u_list = [ulow + rng.random((n_independent, m)) * uwidth]

    anchor = low + rng.random((n_coincident, n)) * width
    v = rng.standard_normal((n_coincident, n))
    norms = np.linalg.norm(v, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    v /= norms
    x1_list.append(anchor)
    x2_list.append(np.clip(anchor + _PAIR_EPS * v, low, s.region.upper))
    u_list.append(ulow + rng.random((n_coincident, m)) * uwidth)

    px1, px2, pu = _probe_pairs(s)
    if px1.size:
        x1_list.append(px1)
        x2_list.append(px2)
        u_list.append(pu)

    x1 = np.concatenate(x1_list)
    x2 = np.concatenate(x2_list)
    u = np.concatenate(u_list)
    return PairSample(x1=x1, x2=x2, u=u)


def _box_anchors(lower: np.ndarray, upper: np.ndarray, pull: float) -> list[np.ndarray]:
    """Center plus corners pulled inward so probe offsets stay in the box."""
    dims = lower.shape[0]
    anchors = [0.5 * (lower + upper)]
    if dims == 0:
        return anchors
    shift = np.minimum(pull, 0.25 * (upper - lower))
    if dims <= 10:
        for signs in itertools.product((0, 1), repeat=dims):
            corner = np.where(np.asarray(signs, bool), upper - shift, lower + shift)
            anchors.append(corner)
    else:
        for d in range(dims):
            for side in (lower + shift, upper - shift):
                point = anchors[0].copy()
                point[d] = side[d]
                anchors.append(point)
    return anchors


def _probe_pairs(s: SystemSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Near-coincident probes along locally extremal Jacobian directions.

    Directions come from the spec's f only, never from the map under
    test, so every measurement over the same spec sees the identical
    pair set.
    """
    x1, x2, u = [], [], []
    x_anchors = _box_anchors(s.region.lower, s.region.upper, _PAIR_EPS)
    u_anchors = _box_anchors(s.input_region.lower, s.input_region.upper, 0.0)
    for xa in x_anchors:
        for ua in u_anchors:
            try:
                jac = s.jacobian(xa, ua)
            except ExprError:
                continue
            if not np.all(np.isfinite(jac)):
                continue
            _, v_one = sym_max_eig(0.5 * (jac + jac.T))
            _, v_two = sym_max_eig(jac.T @ jac)
            for v in (v_one, v_two):
                xb = np.clip(xa + _PAIR_EPS * v, s.region.lower, s.region.upper)
                if np.any(xb != xa):
                    x1.append(xa)
                    x2.append(xb)
                    u.append(ua)
    if not x1:
        return np.zeros((0, s.n)), np.zeros((0, s.n)), np.zeros((0, s.m))
    return np.asarray(x1), np.asarray(x2), np.asarray(u)


# ---------------------------------------------------------------------------
# quotient suprema over pair samples

def sup_pair_quotient(
    map_batch,
    s: SystemSpec,
    cfg: SamplingConfig,
    one_sided: bool,
    pairs: PairSample | None = None,
) -> tuple[float, dict]:
    """Supremum of the (one-sided) difference quotient of a map over pairs.

    ``map_batch(X, U) -> (N, d)`` is the map under test.  Two-sided
    quotient: ||m(x1,u)-m(x2,u)|| / ||x1-x2||; one-sided:
    <m(x1,u)-m(x2,u), x1-x2> / ||x1-x2||^2.  Samples where the map is
    non-finite are skipped; more than 10% failures is an error.
    Returns the supremum and the witness pair.
    """
    if pairs is None:
        pairs = sample_pairs(s, cfg)
    m1 = _chunk_map(map_batch, (pairs.x1, pairs.u), (s.n,))
    m2 = _chunk_map(map_batch, (pairs.x2, pairs.u), (s.n,))
    dx = pairs.x1 - pairs.x2
    dm = m1 - m2
    dist_sq = np.einsum("ij,ij->i", dx, dx)
    ok = np.isfinite(m1).all(axis=1) & np.isfinite(m2).all(axis=1)
    failures = int(np.count_nonzero(~ok))
    if failures > _MAX_FAIL_FRACTION * len(ok):
        raise NumericalError(
            f"{failures}/{len(ok)} pair evaluations failed (domain errors)"
        )
    ok &= dist_sq > 0.0
    if not np.any(ok):
        raise NumericalError("no valid pairs to evaluate")
    if one_sided:
        quotients = np.einsum("ij,ij->i", dm, dx)[ok] / dist_sq[ok]
    else:
        quotients = np.sqrt(np.einsum("ij,ij->i", dm, dm)[ok] / dist_sq[ok])
    idx_ok = np.flatnonzero(ok)
    best = int(idx_ok[np.argmax(quotients)])
    witness = {
        "x1": pairs.x1[best].tolist(),
        "x2": pairs.x2[best].tolist(),
        "u": pairs.u[best].tolist(),
    }
    value = float(np.max(quotients))
    return value, witness


# ---------------------------------------------------------------------------
# grid suprema with polish

def _coordinate_polish(objective, start, lower, upper, steps, iters):
    """Local coordinate descent with per-iteration step halving.

    Only accepts improvements, so the returned value never falls below
    objective(start); candidates are clipped into the box.
    """
    x = start.astype(float).copy()
    best = objective(x)
    h = steps.astype(float).copy()
    for _ in range(iters):
        for d in range(x.shape[0]):
            if h[d] <= 0.0:
                continue
            for sign in (1.0, -1.0):
                cand = x.copy()
                cand[d] = min(max(cand[d] + sign * h[d], lower[d]), upper[d])
                if cand[d] == x[d]:
                    continue
                val = objective(cand)
                if val > best:
                    best = val
                    x = cand
        h *= 0.5
    return best, x


def _grid_sup(s: SystemSpec, cfg: SamplingConfig, values_for_rows) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate a row objective over the D x U grid; returns (values, points)."""
    pts = grid_points(s, cfg)
    vals = values_for_rows(pts[:, : s.n], pts[:, s.n :])
    failures = int(np.count_nonzero(~np.isfinite(vals)))
    if failures > _MAX_FAIL_FRACTION * len(vals):
        raise NumericalError(f"{failures}/{len(vals)} grid evaluations failed")
    vals = np.where(np.isfinite(vals), vals, -np.inf)
    return vals, pts


def _sigma_rows(mats: np.ndarray) -> np.ndarray:
    out = np.empty(mats.shape[0])
    for i in range(mats.shape[0]):
        if not np.all(np.isfinite(mats[i])):
            out[i] = np.nan
            continue
        try:
            out[i] = max_singular_value(mats[i])
        except NumericalError:
            out[i] = np.nan
    return out


def _surrogate_rows(tensors: np.ndarray) -> np.ndarray:
    out = np.empty(tensors.shape[0])
    for i in range(tensors.shape[0]):
        if not np.all(np.isfinite(tensors[i])):
            out[i] = np.nan
            continue
        try:
            out[i] = tensor3_norm_surrogate(tensors[i])
        except NumericalError:
            out[i] = np.nan
    return out


def _polish_setup(s: SystemSpec, cfg: SamplingConfig):
    lower, upper = _domain_box(s)
    g = _effective_grid(lower.shape[0], cfg.grid_per_axis)
    steps = (upper - lower) / (g - 1)  # one mesh cell per axis
    return lower, upper, steps


def estimate_gamma_c(s: SystemSpec, cfg: SamplingConfig) -> tuple[float, dict]:
    """Empirical sup of ||df/dx|| over D x U: grid plus local polish.

    A lower bound on the true Lipschitz constant; the witness is the
    attaining point.
    """

    def rows(x, u):
        jac = _chunk_map(s.jacobian_batch, (x, u), (s.n, s.n))
        return _chunk_map(_sigma_rows, (jac,), ())

    vals, pts = _grid_sup(s, cfg, rows)
    best_row = int(np.argmax(vals))
    grid_best = float(vals[best_row])

    def objective(z):
        try:
            return max_singular_value(s.jacobian(z[: s.n], z[s.n :]))
        except (ExprError, NumericalError, ValueError):
            return -np.inf

    lower, upper, steps = _polish_setup(s, cfg)
    polished, zbest = _coordinate_polish(
        objective, pts[best_row], lower, upper, steps, cfg.polish_iters
    )
    if polished > grid_best:
        value, point = polished, zbest
    else:
        value, point = grid_best, pts[best_row]
    witness = {"x": point[: s.n].tolist(), "u": point[s.n :].tolist()}
    return value, witness


def estimate_rho_c(s: SystemSpec, cfg: SamplingConfig) -> tuple[float, dict]:
    """Empirical sup of the one-sided Lipschitz quotient of f over D.

    May be negative; the near-coincident pair family makes quotients
    attained in the x2 -> x1 limit reachable.
    """
    return sup_pair_quotient(s.eval_f_batch, s, cfg, one_sided=True)


def estimate_beta_and_m(s: SystemSpec, cfg: SamplingConfig) -> tuple[float, float, dict]:
    """Grid suprema of ||d^2 f/dx^2|| (mode-1 surrogate) and ||f||."""

    def beta_rows(x, u):
        hess = _chunk_map(s.second_derivative_batch, (x, u), (s.n, s.n, s.n))
        return _chunk_map(_surrogate_rows, (hess,), ())

    beta_vals, pts = _grid_sup(s, cfg, beta_rows)

    def m_rows(x, u):
        f = _chunk_map(s.eval_f_batch, (x, u), (s.n,))
        return np.sqrt(np.einsum("ij,ij->i", f, f))

    m_vals, _ = _grid_sup(s, cfg, m_rows)

    beta_row = int(np.argmax(beta_vals))
    m_row = int(np.argmax(m_vals))
    witnesses = {
        "beta": {"x": pts[beta_row, : s.n].tolist(), "u": pts[beta_row, s.n :].tolist()},
        "big_m": {"x": pts[m_row, : s.n].tolist(), "u": pts[m_row, s.n :].tolist()},
    }
    return float(beta_vals[beta_row]), float(m_vals[m_row]), witnesses


def estimate_all(s: SystemSpec, cfg: SamplingConfig) -> ConstantEstimates:
    """All constants the bound formulas need, with witnesses."""
    gamma, gamma_w = estimate_gamma_c(s, cfg)
    rho, rho_w = estimate_rho_c(s, cfg)
    beta, big_m, bm_w = estimate_beta_and_m(s, cfg)
    sigma = max_singular_value(s.a)
    witnesses = {"gamma_c": gamma_w, "rho_c": rho_w, **bm_w}
    return ConstantEstimates(
        gamma_c=gamma,
        rho_c=rho,
        beta=beta,
        big_m=big_m,
        sigma_bar_a=sigma,
        witnesses=witnesses,
        config=cfg,
    )
