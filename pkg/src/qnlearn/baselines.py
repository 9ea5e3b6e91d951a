"""Hand-crafted optimizers expressed in the oracle/model/update/storage form:
gradient descent, heavy-ball, Newton, ADAM (in its plain form without bias
correction), and classical BFGS (the learned method with y fixed to d)."""
from __future__ import annotations

import numpy as np

from .errors import SingularError
from .framework import (
    GRADIENT_LIKE,
    POINT_LIKE,
    AlgorithmSpec,
    State,
)
from .learned_bfgs import classical_spec as classical_bfgs_spec  # noqa: F401
from .linesearch import LineSearchConfig, backtracking_search, search_or_smallest

__all__ = [
    "gd_spec",
    "heavy_ball_spec",
    "newton_spec",
    "adam_spec",
    "classical_bfgs_spec",
    "LineSearchConfig",
    "backtracking_search",
]


def _no_model(inputs):
    return None


def gd_spec(gamma: float = 0.1) -> AlgorithmSpec:
    """x <- x - gamma * grad."""
    if gamma <= 0:
        raise ValueError("step size must be positive")

    def oracle(ctx, state):
        return ctx.grad.reshape(-1, 1)

    def update(ctx, state, inputs, y):
        return -(ctx.hyper["gamma"] * ctx.grad), {"step_size": ctx.hyper["gamma"]}

    def storage(ctx, state, inputs, y, extras):
        return state

    return AlgorithmSpec(
        name="gd", n_i=1, oracle=oracle, model=_no_model, update=update,
        storage=storage, init_state=lambda problem: State(),
        hyper={"gamma": gamma},
    )


def heavy_ball_spec(alpha: float = 0.9, gamma: float = 0.1) -> AlgorithmSpec:
    """x <- x + alpha * (x - x_prev) - gamma * grad."""
    if not 0.0 <= alpha < 1.0:
        raise ValueError("momentum must be in [0, 1)")
    if gamma <= 0:
        raise ValueError("step size must be positive")

    def oracle(ctx, state):
        d = ctx.x - state.vectors["x_prev"]
        return np.column_stack([d, ctx.grad])

    def update(ctx, state, inputs, y):
        step = ctx.hyper["alpha"] * inputs[:, 0] - ctx.hyper["gamma"] * ctx.grad
        return step, {"step_size": ctx.hyper["gamma"]}

    def storage(ctx, state, inputs, y, extras):
        return State(vectors={"x_prev": ctx.x},
                     vector_roles={"x_prev": POINT_LIKE})

    def init_state(problem):
        x_prev, _ = problem.require_init_pair()
        return State(vectors={"x_prev": np.asarray(x_prev, dtype=float)},
                     vector_roles={"x_prev": POINT_LIKE})

    return AlgorithmSpec(
        name="hb", n_i=2, oracle=oracle, model=_no_model, update=update,
        storage=storage, init_state=init_state,
        hyper={"alpha": alpha, "gamma": gamma},
    )


def newton_spec() -> AlgorithmSpec:
    """Full Newton step from the analytic hessian, optional line search."""

    def oracle(ctx, state):
        return ctx.grad.reshape(-1, 1)

    def update(ctx, state, inputs, y):
        h = ctx.problem.hessian(ctx.x)
        try:
            direction = np.linalg.solve(h, -ctx.grad)
        except np.linalg.LinAlgError as exc:
            raise SingularError(f"singular hessian: {exc}") from exc
        ls = ctx.line_search
        if ls is not None and ls.enabled:
            t = search_or_smallest(ctx.problem.objective, ctx.x, direction, ls,
                                   grad_at_x=ctx.grad)
        else:
            t = 1.0
        return t * direction, {"step_size": t}

    def storage(ctx, state, inputs, y, extras):
        return state

    return AlgorithmSpec(
        name="newton", n_i=1, oracle=oracle, model=_no_model, update=update,
        storage=storage, init_state=lambda problem: State(),
        needs_hessian=True,
    )


def adam_spec(beta1: float = 0.9, beta2: float = 0.999, gamma: float = 0.01,
              eps: float = 1e-8) -> AlgorithmSpec:
    """Plain ADAM recursion without bias correction.

    ``eps=0`` reproduces the textbook-form division by sqrt(v2) exactly,
    which is what the scaling-invariance checks exercise.
    """
    if not (0.0 <= beta1 < 1.0 and 0.0 <= beta2 < 1.0):
        raise ValueError("beta parameters must be in [0, 1)")
    if gamma <= 0 or eps < 0:
        raise ValueError("need gamma > 0 and eps >= 0")

    def oracle(ctx, state):
        return ctx.grad.reshape(-1, 1)

    def update(ctx, state, inputs, y):
        h = ctx.hyper
        m = h["beta1"] * state.vectors["m"] + (1.0 - h["beta1"]) * ctx.grad
        v2 = h["beta2"] * state.vectors["v2"] \
            + (1.0 - h["beta2"]) * ctx.grad * ctx.grad
        step = -h["gamma"] * m / (np.sqrt(v2) + h["eps"])
        return step, {"m": m, "v2": v2, "step_size": h["gamma"]}

    def storage(ctx, state, inputs, y, extras):
        return State(
            vectors={"m": extras["m"], "v2": extras["v2"]},
            vector_roles={"m": GRADIENT_LIKE, "v2": GRADIENT_LIKE},
        )

    def init_state(problem):
        # both moments start at zero, which every role map fixes
        zero = np.zeros(problem.dim)
        return State(
            vectors={"m": zero, "v2": zero.copy()},
            vector_roles={"m": GRADIENT_LIKE, "v2": GRADIENT_LIKE},
        )

    return AlgorithmSpec(
        name="adam", n_i=1, oracle=oracle, model=_no_model, update=update,
        storage=storage, init_state=init_state,
        hyper={"beta1": beta1, "beta2": beta2, "gamma": gamma, "eps": eps},
    )
