"""Generic iterative-optimizer runner.

An algorithm is four pieces: an *oracle* that builds an (n, n_i) input
matrix from the problem and carried state, a *model* turning the input
into a prediction, an *update* producing the step, and a *storage* rule
carrying state to the next iteration.  `run` executes that loop for a
fixed iteration count and records the full trajectory.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import CapabilityError, DivergenceError, ShapeError
from .numerics import sym_eigenvalues
from .problems import Problem

POINT_LIKE = "point-like"
GRADIENT_LIKE = "gradient-like"
INVERSE_HESSIAN_LIKE = "inverse-hessian-like"


@dataclass
class State:
    """Named vectors and matrices carried between iterations.

    Every label declares a transformation role so the equivariance
    harness can map states mechanically (see `transforms`).
    """

    vectors: dict[str, np.ndarray] = field(default_factory=dict)
    matrices: dict[str, np.ndarray] = field(default_factory=dict)
    vector_roles: dict[str, str] = field(default_factory=dict)
    matrix_roles: dict[str, str] = field(default_factory=dict)

    def copy(self) -> "State":
        return State(
            vectors=dict(self.vectors),
            matrices=dict(self.matrices),
            vector_roles=dict(self.vector_roles),
            matrix_roles=dict(self.matrix_roles),
        )


@dataclass
class StepContext:
    """Per-iteration view handed to the oracle/update/storage callables.

    The runner evaluates the gradient once per iteration and shares it
    here so components never re-evaluate it.
    """

    problem: Problem
    x: np.ndarray
    grad: np.ndarray
    k: int
    hyper: dict
    line_search: object = None


@dataclass(frozen=True)
class AlgorithmSpec:
    """The oracle/model/update/storage four-tuple plus its hyper-parameters.

    `oracle(ctx, state)` returns an (n, n_i) input matrix; `model(input)`
    returns a prediction vector or None for hand-crafted methods;
    `update(ctx, state, input, y)` returns ``(step, extras)``;
    `storage(ctx, state, input, y, extras)` returns the next state.
    """

    name: str
    n_i: int
    oracle: Callable
    model: Callable
    update: Callable
    storage: Callable
    init_state: Callable[[Problem], State]
    hyper: dict = field(default_factory=dict)
    monitor_matrix: Optional[str] = None
    needs_hessian: bool = False


@dataclass
class Trajectory:
    """Complete record of one run: K+1 iterates and K steps."""

    iterates: list
    f_values: list
    grad_norms: list
    step_sizes_used: list
    b_eigen_bounds: Optional[list] = None  # entries (k, lam_min, lam_max)
    wall_time: float = 0.0
    problem_label: str = ""
    algorithm: str = ""
    hyper: dict = field(default_factory=dict)
    seed: Optional[int] = None

    @property
    def k_max(self) -> int:
        return len(self.iterates) - 1

    def final_suboptimality(self, f_star: float) -> float:
        return self.f_values[-1] - f_star

    def to_csv(self, f_star: Optional[float] = None) -> str:
        """CSV with a JSON metadata comment line, one row per iterate."""
        meta = {
            "problem": self.problem_label,
            "algorithm": self.algorithm,
            "hyper": self.hyper,
            "seed": self.seed,
            "k_max": self.k_max,
        }
        bounds = {}
        if self.b_eigen_bounds:
            bounds = {k: (repr(lo), repr(hi)) for k, lo, hi in self.b_eigen_bounds}
        lines = ["# " + json.dumps(meta, sort_keys=True)]
        lines.append("k,f,f_minus_fstar,grad_norm,bmin,bmax")
        for k, (f, gn) in enumerate(zip(self.f_values, self.grad_norms)):
            gap = "" if f_star is None else repr(f - f_star)
            lo, hi = bounds.get(k, ("", ""))
            lines.append(f"{k},{f!r},{gap},{gn!r},{lo},{hi}")
        return "\n".join(lines) + "\n"


def run(spec: AlgorithmSpec, problem: Problem, k_max: int,
        s0: Optional[State] = None, hyper: Optional[dict] = None,
        line_search=None, record_eigen: bool = True) -> Trajectory:
    """Run `spec` on `problem` for exactly `k_max` iterations.

    Deterministic: identical inputs give an identical trajectory.  A
    non-finite iterate or objective raises DivergenceError carrying the
    partial trajectory.  Eigen-bound recording of the monitored state
    matrix happens every iteration for n <= 200 and every 10th above.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    if spec.needs_hessian and problem.hessian is None:
        raise CapabilityError(f"{spec.name} needs a hessian, {problem.label} has none")
    hyper = {**spec.hyper, **(hyper or {})}
    state = s0.copy() if s0 is not None else spec.init_state(problem)
    x = np.asarray(problem.require_init_pair()[1], dtype=float)
    n = problem.dim

    eigen_stride = 1 if n <= 200 else 10
    record_bounds = record_eigen and spec.monitor_matrix is not None

    traj = Trajectory(
        iterates=[], f_values=[], grad_norms=[], step_sizes_used=[],
        b_eigen_bounds=[] if record_bounds else None,
        problem_label=problem.label, algorithm=spec.name, hyper=dict(hyper),
    )
    start = time.perf_counter()

    def fail(msg):
        traj.wall_time = time.perf_counter() - start
        raise DivergenceError(msg, trajectory=traj)

    for k in range(k_max):
        f = problem.objective(x)
        g = np.asarray(problem.gradient(x), dtype=float)
        if not np.isfinite(f):
            fail(f"non-finite objective at iteration {k}")
        if not np.all(np.isfinite(g)):
            fail(f"non-finite gradient at iteration {k}")
        traj.iterates.append(x)
        traj.f_values.append(float(f))
        traj.grad_norms.append(float(np.linalg.norm(g)))

        ctx = StepContext(problem=problem, x=x, grad=g, k=k, hyper=hyper,
                          line_search=line_search)
        inputs = spec.oracle(ctx, state)
        if np.shape(inputs) != (n, spec.n_i):
            raise ShapeError(
                f"oracle of {spec.name} returned shape {np.shape(inputs)}, "
                f"expected {(n, spec.n_i)}"
            )
        y = spec.model(inputs)
        step, extras = spec.update(ctx, state, inputs, y)
        x_next = x + step
        state = spec.storage(ctx, state, inputs, y, extras)
        traj.step_sizes_used.append(float(extras.get("step_size", hyper.get("gamma", 1.0))))

        if record_bounds and k % eigen_stride == 0:
            b = state.matrices.get(spec.monitor_matrix)
            if b is not None:
                w = sym_eigenvalues(b)
                traj.b_eigen_bounds.append((k, float(w[0]), float(w[-1])))

        if not np.all(np.isfinite(x_next)):
            fail(f"non-finite iterate at iteration {k + 1}")
        x = x_next

    f = problem.objective(x)
    g = problem.gradient(x)
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        fail(f"non-finite final evaluation at iteration {k_max}")
    traj.iterates.append(x)
    traj.f_values.append(float(f))
    traj.grad_norms.append(float(np.linalg.norm(g)))
    traj.wall_time = time.perf_counter() - start
    return traj
