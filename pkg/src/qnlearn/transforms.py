"""Invertible problem re-representations and the matching state maps.

A transform T rewrites a problem (f, x0, S0) into the equivalent
(f o T^-1, T(x0), S0-hat).  Function rescaling is the odd one out: it
scales f and leaves points unchanged.  State entries are mapped by their
declared role: points move with T, gradient-like vectors move with the
chain-rule gradient factor, and inverse-hessian-like matrices move like
the inverse Hessian does.
"""
from __future__ import annotations

from dataclasses import dataclass, replace as dc_replace
from typing import Optional

import numpy as np

from .errors import RoleError, ShapeError
from .framework import GRADIENT_LIKE, INVERSE_HESSIAN_LIKE, POINT_LIKE, State
from .numerics import Rng
from .problems import Problem

TRANSLATION = "translation"
PERMUTATION = "permutation"
ORTHOGONAL = "orthogonal"
GEOMETRIC_SCALE = "geometric_scale"
FUNCTION_SCALE = "function_scale"

_ORTHO_TOL = 1e-10


@dataclass(frozen=True)
class ProblemTransform:
    kind: str
    vector: Optional[np.ndarray] = None   # translation offset
    matrix: Optional[np.ndarray] = None   # permutation / orthogonal Q
    scale: Optional[float] = None         # geometric / function factor

    def __post_init__(self):
        if self.kind in (PERMUTATION, ORTHOGONAL):
            q = self.matrix
            if q is None:
                raise ShapeError(f"{self.kind} transform needs a matrix")
            n = q.shape[0]
            if np.abs(q.T @ q - np.eye(n)).max() > _ORTHO_TOL:
                raise ShapeError(f"{self.kind} matrix is not orthogonal")
        elif self.kind == TRANSLATION:
            if self.vector is None:
                raise ShapeError("translation needs an offset vector")
        elif self.kind in (GEOMETRIC_SCALE, FUNCTION_SCALE):
            if self.scale is None or self.scale <= 0:
                raise ShapeError(f"{self.kind} needs a positive factor")
        else:
            raise ShapeError(f"unknown transform kind {self.kind!r}")

    @property
    def dim(self) -> Optional[int]:
        if self.vector is not None:
            return self.vector.shape[0]
        if self.matrix is not None:
            return self.matrix.shape[0]
        return None

    # -- point maps ---------------------------------------------------
    def apply_point(self, x):
        if self.kind == TRANSLATION:
            return x + self.vector
        if self.kind in (PERMUTATION, ORTHOGONAL):
            return self.matrix @ x
        if self.kind == GEOMETRIC_SCALE:
            return self.scale * x
        return x  # function rescaling leaves points alone

    def invert_point(self, x):
        if self.kind == TRANSLATION:
            return x - self.vector
        if self.kind in (PERMUTATION, ORTHOGONAL):
            return self.matrix.T @ x
        if self.kind == GEOMETRIC_SCALE:
            return x / self.scale
        return x

    # -- role maps for state entries ----------------------------------
    def apply_gradient_like(self, g):
        if self.kind == TRANSLATION:
            return g
        if self.kind in (PERMUTATION, ORTHOGONAL):
            return self.matrix @ g
        if self.kind == GEOMETRIC_SCALE:
            return g / self.scale
        return self.scale * g

    def apply_inverse_hessian_like(self, b):
        if self.kind == TRANSLATION:
            return b
        if self.kind in (PERMUTATION, ORTHOGONAL):
            return self.matrix @ b @ self.matrix.T
        if self.kind == GEOMETRIC_SCALE:
            return self.scale * self.scale * b
        return b / self.scale

    @property
    def value_factor(self) -> float:
        """Factor relating optimal objective values across representations."""
        return self.scale if self.kind == FUNCTION_SCALE else 1.0

    def inverse(self) -> "ProblemTransform":
        if self.kind == TRANSLATION:
            return ProblemTransform(TRANSLATION, vector=-self.vector)
        if self.kind in (PERMUTATION, ORTHOGONAL):
            return ProblemTransform(self.kind, matrix=self.matrix.T.copy())
        return ProblemTransform(self.kind, scale=1.0 / self.scale)


def translation(v) -> ProblemTransform:
    return ProblemTransform(TRANSLATION, vector=np.asarray(v, dtype=float))


def permutation(p) -> ProblemTransform:
    return ProblemTransform(PERMUTATION, matrix=np.asarray(p, dtype=float))


def orthogonal(q) -> ProblemTransform:
    return ProblemTransform(ORTHOGONAL, matrix=np.asarray(q, dtype=float))


def geometric_scale(lam: float) -> ProblemTransform:
    return ProblemTransform(GEOMETRIC_SCALE, scale=float(lam))


def function_scale(lam: float) -> ProblemTransform:
    return ProblemTransform(FUNCTION_SCALE, scale=float(lam))


def permutation_matrix(perm) -> np.ndarray:
    """Matrix P with (P x)[i] = x[perm[i]]."""
    n = len(perm)
    p = np.zeros((n, n))
    p[np.arange(n), perm] = 1.0
    return p


def random_permutation(n: int, rng: Rng) -> ProblemTransform:
    return permutation(permutation_matrix(rng.permutation(n)))


def random_orthogonal(n: int, rng: Rng) -> ProblemTransform:
    """Product of n Householder reflections of seeded Gaussian vectors."""
    q = np.eye(n)
    for _ in range(n):
        u = rng.normal(size=n)
        u = u / np.linalg.norm(u)
        q = q - 2.0 * np.outer(u, u @ q)
    return orthogonal(q)


def transform_problem(t: ProblemTransform, problem: Problem,
                      s0: Optional[State] = None):
    """The same problem in transformed coordinates, plus the mapped state.

    Every state label must carry a declared role; anything else raises
    RoleError rather than guessing a rule.
    """
    if t.dim is not None and t.dim != problem.dim:
        raise ShapeError(
            f"transform dimension {t.dim} vs problem dimension {problem.dim}"
        )
    f, g, h = problem.objective, problem.gradient, problem.hessian

    if t.kind == FUNCTION_SCALE:
        lam = t.scale
        objective = lambda x: lam * f(x)
        gradient = lambda x: lam * np.asarray(g(x), dtype=float)
        hessian = None if h is None else (lambda x: lam * h(x))
        f_star = None if problem.f_star is None else lam * problem.f_star
    else:
        inv = t.invert_point
        objective = lambda x: f(inv(x))
        gradient = lambda x: t.apply_gradient_like(np.asarray(g(inv(x)), dtype=float))
        if h is None:
            hessian = None
        elif t.kind == TRANSLATION:
            hessian = lambda x: h(inv(x))
        elif t.kind in (PERMUTATION, ORTHOGONAL):
            hessian = lambda x: t.matrix @ h(inv(x)) @ t.matrix.T
        else:  # geometric scaling
            hessian = lambda x: h(inv(x)) / (t.scale * t.scale)
        f_star = problem.f_star

    pair = problem.x_init_pair
    if pair is not None:
        pair = (t.apply_point(pair[0]), t.apply_point(pair[1]))

    new_problem = dc_replace(
        problem,
        objective=objective,
        gradient=gradient,
        hessian=hessian,
        x_init_pair=pair,
        f_star=f_star,
        label=f"{problem.label}|{t.kind}",
        supports_tape=False,
        quadratic=None,
    )
    if s0 is None:
        return new_problem, None
    return new_problem, transform_state(t, s0)


def transform_state(t: ProblemTransform, state: State) -> State:
    out = State(vector_roles=dict(state.vector_roles),
                matrix_roles=dict(state.matrix_roles))
    for label, vec in state.vectors.items():
        role = state.vector_roles.get(label)
        if role == POINT_LIKE:
            out.vectors[label] = t.apply_point(vec)
        elif role == GRADIENT_LIKE:
            out.vectors[label] = t.apply_gradient_like(vec)
        else:
            raise RoleError(f"state vector {label!r} has unknown role {role!r}")
    for label, mat in state.matrices.items():
        role = state.matrix_roles.get(label)
        if role == INVERSE_HESSIAN_LIKE:
            out.matrices[label] = t.apply_inverse_hessian_like(mat)
        else:
            raise RoleError(f"state matrix {label!r} has unknown role {role!r}")
    return out
