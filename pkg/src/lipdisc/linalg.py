"""Dense linear algebra kernels: induced 2-norm, matrix exponential,
order-3 tensor norm surrogate.

Matrices and order-3 tensors are plain float ndarrays of shape (n, m)
and (d1, d2, d3).  All functions are pure and deterministic: the power
iteration uses a fixed start vector, no RNG.
"""

from __future__ import annotations

import math

import numpy as np


class NumericalError(RuntimeError):
    """An iterative numerical routine failed to converge."""


def max_singular_value(a: np.ndarray, max_iter: int = 10_000, tol: float = 1e-14) -> float:
    """Induced 2-norm (largest singular value) of a real matrix.

    Shifted power iteration on A^T A with a deterministic start vector
    (normalized all-ones perturbed by 1/(i+1) per coordinate), stopping
    when the Rayleigh quotient changes by less than ``tol`` relative to
    max(1, lambda).
    """
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        raise ValueError("matrix is empty")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    n = a.shape[1]
    v = np.full(n, 1.0 / math.sqrt(n)) + 1.0 / (np.arange(n) + 1.0)
    v /= np.linalg.norm(v)
    lam_prev = None
    for _ in range(max_iter):
        av = a @ v
        lam = float(av @ av)
        if lam_prev is not None and abs(lam - lam_prev) <= tol * max(1.0, lam):
            return math.sqrt(lam)
        lam_prev = lam
        w = a.T @ av
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            return 0.0
        v = w / norm_w
    raise NumericalError(
        f"power iteration did not converge within {max_iter} iterations"
    )


def expm(a: np.ndarray, t: float = 1.0) -> np.ndarray:
    """exp(A t) by scaling and squaring with a truncated Taylor core.

    The scaled matrix has norm <= 1/2, where 16 Taylor terms leave a
    remainder below 1e-19; squaring restores the full exponent.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    m = a * t
    norm = float(np.max(np.sum(np.abs(m), axis=1))) if m.size else 0.0
    squarings = max(0, int(math.ceil(math.log2(norm / 0.5)))) if norm > 0.5 else 0
    b = m / (2.0**squarings)
    eye = np.eye(a.shape[0])
    acc = eye.copy()
    for k in range(16, 0, -1):
        acc = eye + (b / k) @ acc
    for _ in range(squarings):
        acc = acc @ acc
    return acc


def tensor3_norm_surrogate(t3: np.ndarray) -> float:
    """Upper bound on the bilinear induced norm of an order-3 tensor.

    Returns the induced 2-norm of the mode-1 unfolding (d1 x d2*d3).
    For unit y, z: ||T(., y, z)|| = ||unfold(T) (y kron z)|| <= sigma_max,
    since ||y kron z|| = ||y|| ||z|| = 1, so the bound is conservative.
    The exact bilinear norm is NP-hard in general.
    """
    t3 = np.asarray(t3, dtype=float)
    if t3.ndim != 3:
        raise ValueError(f"expected an order-3 tensor, got shape {t3.shape}")
    if not np.all(np.isfinite(t3)):
        raise ValueError("tensor has non-finite entries")
    d1 = t3.shape[0]
    unfolding = t3.reshape(d1, -1)
    if not unfolding.any():
        return 0.0
    return max_singular_value(unfolding)


def sym_max_eig(s: np.ndarray) -> tuple[float, np.ndarray]:
    """Largest (algebraic) eigenvalue and eigenvector of a symmetric matrix."""
    w, v = np.linalg.eigh(np.asarray(s, dtype=float))
    return float(w[-1]), v[:, -1]
