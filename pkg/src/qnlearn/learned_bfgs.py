"""Learned quasi-Newton method.

The carried state is {previous point, previous gradient, inverse-Hessian
approximation B}.  Each iteration builds three translation-invariant
features (B dg, d, -gamma B grad), lets a model predict a direction-like
vector y, applies the generalized rank-two secant update parameterized
by y, and steps along -gamma B_new grad.  Predicting y = d recovers
classical BFGS exactly, which is how the `classical` spec is built.

The update core is written against the dispatching numerics ops, so the
unrolled trainer records the very same arithmetic on a tape.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import StationaryStartError
from .framework import (
    GRADIENT_LIKE,
    INVERSE_HESSIAN_LIKE,
    POINT_LIKE,
    AlgorithmSpec,
    State,
    Trajectory,
    run,
)
from .linesearch import LineSearchConfig, search_or_smallest
from .model import ModelWeights, forward
from .numerics import column, dot, matvec, outer, stack_cols, transpose, value_of
from .problems import Problem

X_PREV = "x_prev"
G_PREV = "g_prev"
B_MATRIX = "b"

BB_SHRINK = 0.8


@dataclass(frozen=True)
class UpdateGuards:
    """Safety knobs for the rank-two update.

    The update divides by <dg, y>; when that inner product is tiny
    relative to ||dg|| ||y|| the update is skipped and B carried over,
    as in classical curvature-skip practice.  Symmetrization squashes
    floating-point drift of B over long runs.
    """

    curvature_tol: float = 1e-10
    symmetrize: bool = True

    def __post_init__(self):
        if self.curvature_tol <= 0:
            raise ValueError("curvature_tol must be positive")


DEFAULT_GUARDS = UpdateGuards()


def bb_init(x_prev, x0, g_prev, g0) -> np.ndarray:
    """Spectral initialization B = 0.8 * <dg0, d0> / ||dg0||^2 * I.

    A non-positive spectral estimate (non-convex start) falls back to
    its absolute value so the first step still descends.
    """
    d0 = np.asarray(x0, dtype=float) - np.asarray(x_prev, dtype=float)
    dg0 = np.asarray(g0, dtype=float) - np.asarray(g_prev, dtype=float)
    sq = float(np.dot(dg0, dg0))
    if sq < 1e-30:
        raise StationaryStartError(
            "gradient difference of the starting pair is numerically zero"
        )
    gamma_bb = float(np.dot(dg0, d0)) / sq
    if gamma_bb <= 0:
        warnings.warn(
            f"non-positive spectral step {gamma_bb:.3e}; using its magnitude",
            stacklevel=2,
        )
        gamma_bb = abs(gamma_bb)
    n = d0.shape[0]
    return BB_SHRINK * gamma_bb * np.eye(n)


def oracle_input(b, d, dg, grad, gamma):
    """Feature matrix (B dg, d, -gamma B grad), columns in that order."""
    return stack_cols(matvec(b, dg), d, -(gamma * matvec(b, grad)))


def rank_two_update(b, d, dg, y, guards: UpdateGuards = DEFAULT_GUARDS):
    """Generalized secant update of the inverse-Hessian approximation.

    Returns ``(b_new, skipped)``.  Works on numpy arrays and tape nodes
    alike; the skip decision reads plain values, so on a tape a skipped
    update simply carries B through unchanged.
    """
    s = dot(dg, y)
    s_val = float(value_of(s))
    dg_val, y_val = value_of(dg), value_of(y)
    threshold = guards.curvature_tol * float(
        np.linalg.norm(dg_val) * np.linalg.norm(y_val)
    )
    if abs(s_val) <= threshold:
        return b, True
    r = d - matvec(b, dg)
    a = dot(dg, r)
    correction = outer(r, y) + outer(y, r) - (a / s) * outer(y, y)
    b_new = b + (1.0 / s) * correction
    if guards.symmetrize:
        b_new = 0.5 * (b_new + transpose(b_new))
    return b_new, False


def qn_step(b_new, grad, gamma):
    """Fixed-step move -gamma * B grad (shared by runner and trainer)."""
    return -(gamma * matvec(b_new, grad))


def update_u(inputs, y, state: State, x, grad, gamma,
             guards: UpdateGuards = DEFAULT_GUARDS, line_search=None,
             objective=None):
    """One update: new B from the rank-two formula, then the iterate step.

    Returns ``(b_new, x_next, extras)``; extras carries the step vector,
    the applied step size, and whether the curvature guard skipped.
    """
    d = x - state.vectors[X_PREV]
    dg = grad - state.vectors[G_PREV]
    b_new, skipped = rank_two_update(state.matrices[B_MATRIX], d, dg, y, guards)
    if line_search is not None and line_search.enabled:
        direction = -matvec(b_new, grad)
        t = search_or_smallest(objective, x, direction, line_search,
                               grad_at_x=grad)
        step = t * direction
    else:
        t = gamma
        step = qn_step(b_new, grad, gamma)
    extras = {"b": b_new, "skipped": skipped, "step_size": t, "step": step}
    return b_new, x + step, extras


def initial_state(problem: Problem) -> State:
    """State {x_prev, grad(x_prev), B} with the spectral B initialization."""
    x_prev, x0 = problem.require_init_pair()
    g_prev = np.asarray(problem.gradient(x_prev), dtype=float)
    g0 = np.asarray(problem.gradient(x0), dtype=float)
    return State(
        vectors={X_PREV: np.asarray(x_prev, dtype=float), G_PREV: g_prev},
        matrices={B_MATRIX: bb_init(x_prev, x0, g_prev, g0)},
        vector_roles={X_PREV: POINT_LIKE, G_PREV: GRADIENT_LIKE},
        matrix_roles={B_MATRIX: INVERSE_HESSIAN_LIKE},
    )


def _make_spec(name: str, model, gamma: float,
               guards: UpdateGuards) -> AlgorithmSpec:
    def oracle(ctx, state):
        d = ctx.x - state.vectors[X_PREV]
        dg = ctx.grad - state.vectors[G_PREV]
        return oracle_input(state.matrices[B_MATRIX], d, dg, ctx.grad,
                            ctx.hyper["gamma"])

    def update(ctx, state, inputs, y):
        _, _, extras = update_u(
            inputs, y, state, ctx.x, ctx.grad, ctx.hyper["gamma"],
            guards=guards, line_search=ctx.line_search,
            objective=ctx.problem.objective,
        )
        return extras.pop("step"), extras

    def storage(ctx, state, inputs, y, extras):
        return State(
            vectors={X_PREV: ctx.x, G_PREV: ctx.grad},
            matrices={B_MATRIX: extras["b"]},
            vector_roles={X_PREV: POINT_LIKE, G_PREV: GRADIENT_LIKE},
            matrix_roles={B_MATRIX: INVERSE_HESSIAN_LIKE},
        )

    return AlgorithmSpec(
        name=name,
        n_i=3,
        oracle=oracle,
        model=model,
        update=update,
        storage=storage,
        init_state=initial_state,
        hyper={"gamma": gamma},
        monitor_matrix=B_MATRIX,
    )


def learned_spec(weights: ModelWeights, gamma: float = 1.0,
                 guards: UpdateGuards = DEFAULT_GUARDS) -> AlgorithmSpec:
    """Quasi-Newton spec whose y comes from the prediction network."""
    return _make_spec("loa-bfgs", lambda inputs: forward(weights, inputs),
                      gamma, guards)


def classical_spec(gamma: float = 1.0,
                   guards: UpdateGuards = DEFAULT_GUARDS) -> AlgorithmSpec:
    """Classical BFGS: identical plumbing with the prediction fixed to y = d."""
    return _make_spec("bfgs", lambda inputs: column(inputs, 1), gamma, guards)


def run_learned(problem: Problem, weights: ModelWeights, k_max: int,
                gamma: float = 1.0, line_search: LineSearchConfig | None = None,
                guards: UpdateGuards = DEFAULT_GUARDS,
                record_eigen: bool = True) -> Trajectory:
    """Full learned-quasi-Newton run; records B eigen-bounds for diagnostics."""
    spec = learned_spec(weights, gamma=gamma, guards=guards)
    return run(spec, problem, k_max, line_search=line_search,
               record_eigen=record_eigen)
