"""Problem construction: synthetic quadratics and logistic instances,
ridge/logistic objectives over loaded datasets, and starting-pair setup.

Every problem exposes the same surface: an objective, a gradient, an
optional hessian, a starting pair ``(x_prev, x0)`` where ``x0`` is one
small gradient step from ``x_prev``, and (when known) the minimum value
``f_star``.  Quadratic and ridge objectives are written against the
dispatching numerics ops, so they can also be evaluated on a recording
tape during unrolled training.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from ..errors import DimensionError, EvalError, SingularError
from ..numerics import Rng, dot, matvec, value_of
from .datasets import Dataset

DEFAULT_INIT_STEP = 1e-3


@dataclass(frozen=True)
class Problem:
    """An unconstrained minimization instance.

    `objective` and `gradient` accept a numpy vector (and, when
    `supports_tape` is set, a tape node) of length `dim`.
    """

    dim: int
    objective: Callable
    gradient: Callable
    label: str
    hessian: Optional[Callable] = None
    x_init_pair: Optional[tuple[np.ndarray, np.ndarray]] = None
    f_star: Optional[float] = None
    supports_tape: bool = False
    quadratic: Optional["QuadraticSpec"] = None

    def with_init_pair(self, rng: Rng, init_step: float = DEFAULT_INIT_STEP) -> "Problem":
        return replace(self, x_init_pair=make_init_pair(self, rng, init_step))

    def require_init_pair(self) -> tuple[np.ndarray, np.ndarray]:
        if self.x_init_pair is None:
            raise ValueError(f"problem {self.label!r} has no starting pair")
        return self.x_init_pair


@dataclass(frozen=True)
class QuadraticSpec:
    """Symmetric positive definite A and target b of f(x) = 0.5 ||Ax - b||^2."""

    a_matrix: np.ndarray
    b: np.ndarray
    lam_min: float = field(default=float("nan"))
    lam_max: float = field(default=float("nan"))


def make_init_pair(problem: Problem, rng: Rng, init_step: float = DEFAULT_INIT_STEP):
    """Standard-normal x_prev and one gradient step of size `init_step` to x0."""
    if init_step <= 0:
        raise ValueError("init_step must be positive")
    x_prev = rng.normal(size=problem.dim)
    g = np.asarray(problem.gradient(x_prev), dtype=float)
    if not np.all(np.isfinite(g)):
        raise EvalError("non-finite gradient at the random starting point")
    x0 = x_prev - init_step * g
    return x_prev, x0


def gen_quadratic(n: int, rng: Rng, init_step: float = DEFAULT_INIT_STEP,
                  label: str | None = None) -> Problem:
    """Random ill-conditioned quadratic f(x) = 0.5 ||Ax - b||^2.

    The spectrum of A has extremes lam_min ~ U[0.1, 1], lam_max ~ U[1, 50]
    and n-2 interior eigenvalues uniform in between; the eigenbasis comes
    from a symmetrized standard-Gaussian matrix; b entries ~ U[0, 15].
    """
    if n < 2:
        raise DimensionError(f"quadratic generator needs n >= 2, got {n}")
    lam_min = float(rng.uniform(0.1, 1.0))
    lam_max = float(rng.uniform(1.0, 50.0))
    interior = rng.uniform(lam_min, lam_max, size=n - 2)
    eigs = np.concatenate([[lam_min], interior, [lam_max]])
    gauss = rng.normal(size=(n, n))
    _, p = np.linalg.eigh(gauss + gauss.T)
    a = (p * eigs) @ p.T
    a = (a + a.T) / 2.0
    b = rng.uniform(0.0, 15.0, size=n)
    spec = QuadraticSpec(a_matrix=a, b=b, lam_min=lam_min, lam_max=lam_max)

    def objective(x):
        r = matvec(a, x) - b
        return 0.5 * dot(r, r)

    def gradient(x):
        r = matvec(a, x) - b
        return matvec(a, r)

    hess = a @ a

    problem = Problem(
        dim=n,
        objective=objective,
        gradient=gradient,
        hessian=lambda x: hess,
        label=label or f"quadratic-n{n}[{rng.label}]",
        f_star=0.0,
        supports_tape=True,
        quadratic=spec,
    )
    return problem.with_init_pair(rng, init_step)


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _logistic_problem(features: np.ndarray, labels: np.ndarray, reg: float,
                      label: str) -> Problem:
    a = np.asarray(features, dtype=float)
    b = np.asarray(labels, dtype=float)
    two_m = a.shape[0]
    dim = a.shape[1]

    def objective(x):
        z = a @ x
        return float(np.sum(np.logaddexp(0.0, z) - b * z) / two_m
                     + 0.5 * reg * np.dot(x, x))

    def gradient(x):
        z = a @ x
        return a.T @ (_sigmoid(z) - b) / two_m + reg * x

    def hessian(x):
        z = a @ x
        s = _sigmoid(z)
        w = s * (1.0 - s)
        return (a.T * w) @ a / two_m + reg * np.eye(dim)

    problem = Problem(
        dim=dim,
        objective=objective,
        gradient=gradient,
        hessian=hessian,
        label=label,
    )
    f_star = _newton_reference_minimum(problem)
    return replace(problem, f_star=f_star)


def gen_logistic_synthetic(n: int, m_per_class: int, reg: float, rng: Rng,
                           init_step: float = DEFAULT_INIT_STEP,
                           label: str | None = None) -> Problem:
    """Two-Gaussian-cloud binary logistic regression with L2 regularization.

    The fitted variable has n+1 coordinates (an all-ones column is
    appended to the data).  The positive regularizer makes the problem
    strongly convex, so the reference minimum is a Newton solve.
    """
    if n < 1 or m_per_class < 1:
        raise DimensionError("need n >= 1 and m_per_class >= 1")
    if reg <= 0:
        raise ValueError("regularization must be positive")
    mu0 = rng.normal(size=n, loc=-1.0)
    mu1 = rng.normal(size=n, loc=1.0)
    cloud0 = mu0 + rng.normal(size=(m_per_class, n))
    cloud1 = mu1 + rng.normal(size=(m_per_class, n))
    points = np.vstack([cloud0, cloud1])
    features = np.hstack([points, np.ones((2 * m_per_class, 1))])
    labels = np.concatenate([np.zeros(m_per_class), np.ones(m_per_class)])
    problem = _logistic_problem(
        features, labels, reg,
        label or f"logistic-synthetic-n{n}-M{m_per_class}[{rng.label}]",
    )
    return problem.with_init_pair(rng, init_step)


def make_logistic(dataset: Dataset, reg: float, rng: Rng | None = None,
                  init_step: float = DEFAULT_INIT_STEP,
                  label: str = "logistic") -> Problem:
    """Binary logistic regression over a loaded dataset (ones column appended)."""
    if reg <= 0:
        raise ValueError("regularization must be positive")
    features = np.hstack([dataset.features,
                          np.ones((dataset.features.shape[0], 1))])
    problem = _logistic_problem(features, dataset.labels, reg, label)
    if rng is not None:
        problem = problem.with_init_pair(rng, init_step)
    return problem


def make_ridge(dataset: Dataset, reg: float, rng: Rng | None = None,
               init_step: float = DEFAULT_INIT_STEP,
               label: str = "ridge") -> Problem:
    """Ridge regression f(x) = ||Ax - b||^2 + (reg/2) ||x||^2.

    The reference minimum comes from the normal equations
    (2 A^T A + reg I) x = 2 A^T b, which requires an invertible system
    when reg is zero.
    """
    if reg < 0:
        raise ValueError("regularization must be non-negative")
    a = dataset.features
    b = dataset.labels
    dim = a.shape[1]
    system = 2.0 * (a.T @ a) + reg * np.eye(dim)
    if reg == 0.0 and (not np.all(np.isfinite(system))
                       or np.linalg.cond(system) > 1e14):
        raise SingularError("A^T A is singular and there is no regularization")
    try:
        x_star = np.linalg.solve(system, 2.0 * a.T @ b)
    except np.linalg.LinAlgError as exc:
        raise SingularError(str(exc)) from exc

    def objective(x):
        r = matvec(a, x) - b
        return dot(r, r) + 0.5 * reg * dot(x, x)

    def gradient(x):
        r = matvec(a, x) - b
        return 2.0 * matvec(a.T, r) + reg * x

    hess = 2.0 * (a.T @ a) + reg * np.eye(dim)
    problem = Problem(
        dim=dim,
        objective=objective,
        gradient=gradient,
        hessian=lambda x: hess,
        label=label,
        f_star=float(value_of(objective(x_star))),
        supports_tape=True,
    )
    if rng is not None:
        problem = problem.with_init_pair(rng, init_step)
    return problem


def _newton_reference_minimum(problem: Problem, grad_tol: float = 1e-12,
                              max_iter: int = 200) -> float:
    """Damped-Newton solve used once to cache f_star for non-quadratic problems."""
    x = np.zeros(problem.dim)
    f = problem.objective(x)
    for _ in range(max_iter):
        g = problem.gradient(x)
        if np.linalg.norm(g) <= grad_tol:
            break
        h = problem.hessian(x)
        try:
            step = np.linalg.solve(h, -g)
        except np.linalg.LinAlgError as exc:
            raise SingularError(f"singular hessian in reference solve: {exc}") from exc
        t = 1.0
        for _ in range(60):
            f_new = problem.objective(x + t * step)
            if f_new <= f + 1e-4 * t * float(np.dot(g, step)):
                break
            t *= 0.5
        x = x + t * step
        f = problem.objective(x)
    else:
        raise EvalError(
            f"reference Newton solve did not reach grad tol {grad_tol}"
        )
    return float(f)
