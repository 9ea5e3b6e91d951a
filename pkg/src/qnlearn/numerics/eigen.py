"""Symmetric eigendecomposition by cyclic Jacobi rotations.

Intended for small dense diagnostics (n <= 2000).  Rotations are applied
in round-robin rounds of disjoint index pairs, so each round is a few
vectorized numpy operations instead of a Python loop over pairs.
"""
from __future__ import annotations

import numpy as np

from ..errors import DimensionError, EigenFailure, SymmetryViolation

_MAX_N = 2000
_SYM_RTOL = 1e-10


def check_symmetric(m: np.ndarray, rtol: float = _SYM_RTOL) -> None:
    """Raise SymmetryViolation unless ||m - m.T||_inf <= rtol * ||m||_inf."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise SymmetryViolation(f"expected a square matrix, got shape {m.shape}")
    scale = np.abs(m).max()
    if np.abs(m - m.T).max() > rtol * max(scale, 1e-300):
        raise SymmetryViolation("matrix is not symmetric within tolerance")


def _round_robin_pairs(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """All index pairs of {0..n-1} grouped into rounds of disjoint pairs."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        ps, qs = [], []
        for i in range(m // 2):
            a, b = players[i], players[m - 1 - i]
            if a < n and b < n:
                ps.append(min(a, b))
                qs.append(max(a, b))
        rounds.append((np.array(ps), np.array(qs)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def sym_eigen(m, max_sweeps: int = 60, want_vectors: bool = True):
    """Eigenvalues (ascending) and orthonormal eigenvectors of a symmetric matrix.

    Returns ``(w, v)`` with ``m @ v[:, i] == w[i] * v[:, i]`` and
    ``v.T @ v == I`` up to roughly 1e-12 * ||m||.  With
    ``want_vectors=False`` returns only ``w``.

    Raises SymmetryViolation for non-symmetric input and EigenFailure if
    the off-diagonal mass has not vanished after `max_sweeps` sweeps.
    """
    m = np.asarray(m, dtype=float)
    check_symmetric(m)
    n = m.shape[0]
    if n > _MAX_N:
        raise DimensionError(f"sym_eigen supports n <= {_MAX_N}, got {n}")
    a = (m + m.T) / 2.0
    v = np.eye(n) if want_vectors else None
    if n == 1:
        w = np.array([a[0, 0]])
        return (w, v) if want_vectors else w

    rounds = _round_robin_pairs(n)
    scale = np.abs(a).max()
    tol = 1e-14 * max(scale, 1e-300)
    mask_off = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        if np.abs(a[mask_off]).max() <= tol:
            break
        for p, q in rounds:
            apq = a[p, q]
            live = np.abs(apq) > 0.0
            if not live.any():
                continue
            pp, qq, apq = p[live], q[live], apq[live]
            with np.errstate(over="ignore", divide="ignore"):
                tau = (a[qq, qq] - a[pp, pp]) / (2.0 * apq)
                sign = np.where(tau >= 0.0, 1.0, -1.0)
                t = sign / (np.abs(tau) + np.sqrt(1.0 + tau * tau))
            t = np.where(np.isfinite(tau), t, 0.0)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            rp, rq = a[pp, :], a[qq, :]
            a[pp, :] = c[:, None] * rp - s[:, None] * rq
            a[qq, :] = s[:, None] * rp + c[:, None] * rq
            cp, cq = a[:, pp].copy(), a[:, qq].copy()
            a[:, pp] = c * cp - s * cq
            a[:, qq] = s * cp + c * cq
            if want_vectors:
                vp, vq = v[:, pp].copy(), v[:, qq].copy()
                v[:, pp] = c * vp - s * vq
                v[:, qq] = s * vp + c * vq
    else:
        raise EigenFailure(f"no convergence after {max_sweeps} sweeps")

    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    w = w[order]
    if want_vectors:
        return w, v[:, order]
    return w


def sym_eigenvalues(m, max_sweeps: int = 60) -> np.ndarray:
    """Eigenvalues only (ascending); skips eigenvector accumulation."""
    return sym_eigen(m, max_sweeps=max_sweeps, want_vectors=False)
