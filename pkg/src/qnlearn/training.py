"""Unrolled training of the prediction network.

The loss for one problem is the mean over segment boundaries
k in {segment, 2*segment, ..., K} of

    log(1 + (f(x_k) - f_star) / (f(x_tilde_k) - f_star)),

where x_tilde is the classical-BFGS trajectory precomputed into a
reference table.  With BFGS-coincident weights every ratio is exactly 1
and the loss is log 2.  Gradients come from recording the learned run
on a tape; to keep the unrolled graph short, the carried state (previous
point, its gradient, the B matrix, and the current iterate) is detached
at every interior segment boundary, so each segment backpropagates only
through its own five iterations.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DivergenceError, NonFiniteLoss, TrainingDiverged
from .framework import run
from .learned_bfgs import (
    DEFAULT_GUARDS,
    UpdateGuards,
    bb_init,
    classical_spec,
    oracle_input,
    qn_step,
    rank_two_update,
)
from .model import ModelWeights, forward, init_bfgs_coincident, random_weights
from .numerics import Rng, Tape, detach, log1p, value_of
from .problems import Problem

LOG2 = math.log(2.0)


@dataclass(frozen=True)
class TrainConfig:
    k_unroll: int = 40
    segment: int = 5
    batch_size: int = 2
    lr_fc: float = 1e-4
    lr_skip: float = 1e-3
    clip_norm: float = 1.0
    epochs: int = 200
    seed: int = 0
    gamma: float = 1.0
    coincident_init: bool = True
    parallel: bool = False

    def __post_init__(self):
        if self.k_unroll % self.segment != 0:
            raise ValueError("segment must divide k_unroll")
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("need batch_size >= 1 and epochs >= 0")

    @property
    def boundaries(self) -> tuple[int, ...]:
        return tuple(range(self.segment, self.k_unroll + 1, self.segment))


@dataclass
class ReferenceTable:
    """Per-problem baseline sub-optimality at every segment boundary."""

    gaps: dict  # label -> {k: positive float}
    k_unroll: int
    segment: int
    excluded: list = field(default_factory=list)

    def __contains__(self, label: str) -> bool:
        return label in self.gaps

    def gap(self, label: str, k: int) -> float:
        return self.gaps[label][k]


def precompute_reference(problems, k_unroll: int = 40, segment: int = 5,
                         gamma: float = 1.0,
                         guards: UpdateGuards = DEFAULT_GUARDS) -> ReferenceTable:
    """Run classical BFGS (fixed step, no line search) on every problem.

    Problems whose baseline gap is non-positive at some boundary (already
    solved to machine precision) or whose baseline run diverges are
    excluded with a warning.
    """
    labels = [p.label for p in problems]
    if len(set(labels)) != len(labels):
        raise ValueError("problem labels must be unique to key the table")
    spec = classical_spec(gamma=gamma, guards=guards)
    table = ReferenceTable(gaps={}, k_unroll=k_unroll, segment=segment)
    boundaries = range(segment, k_unroll + 1, segment)
    for problem in problems:
        if problem.f_star is None:
            raise ValueError(f"problem {problem.label!r} has no f_star")
        try:
            traj = run(spec, problem, k_unroll, record_eigen=False)
        except DivergenceError:
            warnings.warn(f"baseline diverged on {problem.label!r}; excluded",
                          stacklevel=2)
            table.excluded.append(problem.label)
            continue
        gaps = {k: traj.f_values[k] - problem.f_star for k in boundaries}
        if any(g <= 0.0 for g in gaps.values()):
            warnings.warn(
                f"baseline already at the minimum on {problem.label!r}; excluded",
                stacklevel=2,
            )
            table.excluded.append(problem.label)
            continue
        table.gaps[problem.label] = gaps
    return table


def _segment_losses(weights, problem: Problem, ref: ReferenceTable,
                    k_unroll: int, segment: int, gamma: float,
                    guards: UpdateGuards):
    """The per-boundary loss terms of one problem, in boundary order.

    `weights` may hold arrays (plain evaluation) or tape nodes (recorded
    evaluation); both walk the same arithmetic.
    """
    if problem.label not in ref:
        raise KeyError(f"problem {problem.label!r} missing from reference table")
    x_prev, x = problem.require_init_pair()
    g_prev = problem.gradient(x_prev)
    b = bb_init(x_prev, x, g_prev, problem.gradient(x))
    f_star = problem.f_star

    losses = []
    for k in range(k_unroll):
        g = problem.gradient(x)
        d = x - x_prev
        dg = g - g_prev
        inputs = oracle_input(b, d, dg, g, gamma)
        y = forward(weights, inputs)
        b_new, _ = rank_two_update(b, d, dg, y, guards)
        x_next = x + qn_step(b_new, g, gamma)
        if not np.all(np.isfinite(value_of(x_next))):
            raise NonFiniteLoss(
                f"non-finite iterate {k + 1} on {problem.label!r}",
                iterate_index=k + 1,
            )
        x_prev, g_prev, b = x, g, b_new
        x = x_next
        boundary = k + 1
        if boundary % segment == 0:
            f_val = problem.objective(x)
            if not np.isfinite(value_of(f_val)):
                raise NonFiniteLoss(
                    f"non-finite objective at iterate {boundary} on "
                    f"{problem.label!r}",
                    iterate_index=boundary,
                )
            ratio = (f_val - f_star) / ref.gap(problem.label, boundary)
            losses.append(log1p(ratio))
            if boundary < k_unroll:
                x_prev = detach(x_prev)
                g_prev = detach(g_prev)
                b = detach(b)
                x = detach(x)
    return losses


def unrolled_loss(weights, problems, ref: ReferenceTable, k_unroll: int = 40,
                  segment: int = 5, gamma: float = 1.0,
                  guards: UpdateGuards = DEFAULT_GUARDS):
    """Mean of all segment losses over a batch of problems.

    Returns a tape node when `weights` holds nodes, otherwise a float.
    """
    losses = []
    for problem in problems:
        losses.extend(
            _segment_losses(weights, problem, ref, k_unroll, segment, gamma,
                            guards)
        )
    total = losses[0]
    for term in losses[1:]:
        total = total + term
    return total * (1.0 / len(losses))


def segment_start_states(weights: ModelWeights, problem: Problem,
                         k_unroll: int = 40, segment: int = 5,
                         gamma: float = 1.0,
                         guards: UpdateGuards = DEFAULT_GUARDS) -> list:
    """Carried state (x_prev, g_prev, b, x) at the start of every segment.

    Element s is what iteration s*segment begins from; element 0 is the
    plain initialization.  These are the values the recorded loss detaches
    at, so freezing them turns the segmented gradient into an honest
    derivative of a plain function (see `truncated_loss_eval`).
    """
    x_prev, x = problem.require_init_pair()
    g_prev = problem.gradient(x_prev)
    b = bb_init(x_prev, x, g_prev, problem.gradient(x))
    states = [(x_prev, g_prev, b, x)]
    for k in range(k_unroll - segment):
        g = problem.gradient(x)
        inputs = oracle_input(b, x - x_prev, g - g_prev, g, gamma)
        y = forward(weights, inputs)
        b_new, _ = rank_two_update(b, x - x_prev, g - g_prev, y, guards)
        x_next = x + qn_step(b_new, g, gamma)
        x_prev, g_prev, b, x = x, g, b_new, x_next
        if (k + 1) % segment == 0:
            states.append((x_prev, g_prev, b, x))
    return states


def truncated_loss_eval(weights, problem: Problem, ref: ReferenceTable,
                        frozen_states: list, segment: int = 5,
                        gamma: float = 1.0,
                        guards: UpdateGuards = DEFAULT_GUARDS) -> float:
    """Mean segment loss with every segment restarted from a frozen state.

    When the frozen states come from `segment_start_states` at the same
    weights, the value equals `unrolled_loss` and the exact derivative of
    this function in `weights` is what the segmented tape computes, so it
    is the right target for finite-difference gradient checks.
    """
    losses = []
    for s, state in enumerate(frozen_states):
        x_prev, g_prev, b, x = state
        for _ in range(segment):
            g = problem.gradient(x)
            inputs = oracle_input(b, x - x_prev, g - g_prev, g, gamma)
            y = forward(weights, inputs)
            b_new, _ = rank_two_update(b, x - x_prev, g - g_prev, y, guards)
            x_next = x + qn_step(b_new, g, gamma)
            x_prev, g_prev, b, x = x, g, b_new, x_next
        boundary = (s + 1) * segment
        f_val = problem.objective(x)
        ratio = (f_val - problem.f_star) / ref.gap(problem.label, boundary)
        losses.append(log1p(ratio))
    return float(sum(losses) / len(losses))


@dataclass
class _WeightNodes:
    block1: tuple
    block2: tuple
    skip: object

    def layers(self):
        return (*self.block1, *self.block2, self.skip)


def _leaves(tape: Tape, weights: ModelWeights) -> _WeightNodes:
    mats = [tape.leaf(w) for w in weights.layers()]
    return _WeightNodes(block1=tuple(mats[:3]), block2=tuple(mats[3:5]),
                        skip=mats[5])


class _Adam:
    """Bias-corrected ADAM over the six weight matrices, two lr groups."""

    def __init__(self, lr_fc: float, lr_skip: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lrs = [lr_fc] * 5 + [lr_skip]
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = None
        self.v = None
        self.t = 0

    def step(self, weights: ModelWeights, grads) -> ModelWeights:
        mats = [np.asarray(w, dtype=float) for w in weights.layers()]
        if self.m is None:
            self.m = [np.zeros_like(w) for w in mats]
            self.v = [np.zeros_like(w) for w in mats]
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        new = []
        for i, (w, g) in enumerate(zip(mats, grads)):
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g
            m_hat = self.m[i] / c1
            v_hat = self.v[i] / c2
            new.append(w - self.lrs[i] * m_hat / (np.sqrt(v_hat) + self.eps))
        return ModelWeights(block1=tuple(new[:3]), block2=tuple(new[3:5]),
                            skip=new[5])


def _clip_global(grads, clip_norm: float):
    total = math.sqrt(sum(float(np.sum(g * g)) for g in grads))
    if clip_norm > 0 and total > clip_norm:
        scale = clip_norm / total
        grads = [g * scale for g in grads]
    return grads, total


@dataclass
class TrainResult:
    best_weights: ModelWeights
    best_epoch: int
    best_loss: float
    history: list  # rows (epoch, mean_train_loss, mean_test_loss | None)
    excluded: list


def evaluate_mean_loss(weights: ModelWeights, problems, ref: ReferenceTable,
                       config: TrainConfig) -> float:
    """Full-set loss in plain (non-recording) mode; +inf on blow-up."""
    try:
        return float(
            unrolled_loss(weights, problems, ref, config.k_unroll,
                          config.segment, config.gamma)
        )
    except NonFiniteLoss:
        return math.inf


def train(config: TrainConfig, problems, test_problems=None) -> TrainResult:
    """Mini-batch unrolled training with best-epoch checkpointing.

    Epoch 0 of the history is the untouched initialization (log 2 for the
    coincident init).  Batches whose loss blows up are skipped; an epoch
    in which every batch blew up and the evaluation is non-finite raises
    TrainingDiverged carrying the best checkpoint so far.
    """
    ref = precompute_reference(problems, config.k_unroll, config.segment,
                               config.gamma)
    usable = [p for p in problems if p.label in ref]
    if len(usable) < config.batch_size:
        raise ValueError(
            f"{len(usable)} usable problems < batch size {config.batch_size}"
        )
    test_ref = None
    if test_problems is not None:
        test_ref = precompute_reference(test_problems, config.k_unroll,
                                        config.segment, config.gamma)
        test_problems = [p for p in test_problems if p.label in test_ref]

    rng = Rng(config.seed, "train")
    if config.coincident_init:
        weights = init_bfgs_coincident(seed=config.seed)
    else:
        weights = random_weights(rng.substream("random-init"))
    adam = _Adam(config.lr_fc, config.lr_skip)

    def full_eval(w):
        train_loss = evaluate_mean_loss(w, usable, ref, config)
        test_loss = None
        if test_problems:
            test_loss = evaluate_mean_loss(w, test_problems, test_ref, config)
        return train_loss, test_loss

    history = []
    train_loss, test_loss = full_eval(weights)
    history.append((0, train_loss, test_loss))
    best_weights, best_epoch, best_loss = weights, 0, train_loss

    for epoch in range(1, config.epochs + 1):
        order = rng.substream(f"shuffle-{epoch}").permutation(len(usable))
        updates = 0
        for start in range(0, len(order) - config.batch_size + 1,
                           config.batch_size):
            batch = [usable[i] for i in order[start:start + config.batch_size]]
            grads = _batch_gradients(weights, batch, ref, config)
            if grads is None:
                continue
            grads, _ = _clip_global(grads, config.clip_norm)
            weights = adam.step(weights, grads)
            updates += 1
        train_loss, test_loss = full_eval(weights)
        history.append((epoch, train_loss, test_loss))
        if updates == 0 and not math.isfinite(train_loss):
            raise TrainingDiverged(
                f"epoch {epoch} produced no finite batch",
                checkpoint=TrainResult(best_weights, best_epoch, best_loss,
                                       history, ref.excluded),
            )
        if train_loss < best_loss:
            best_weights, best_epoch, best_loss = weights, epoch, train_loss

    return TrainResult(best_weights, best_epoch, best_loss, history,
                       ref.excluded)


def _batch_gradients(weights: ModelWeights, batch, ref: ReferenceTable,
                     config: TrainConfig):
    """Gradient of the pooled batch loss; None if the loss blew up."""
    if config.parallel and len(batch) > 1:
        def one(problem):
            tape = Tape()
            nodes = _leaves(tape, weights)
            losses = _segment_losses(nodes, problem, ref, config.k_unroll,
                                     config.segment, config.gamma,
                                     DEFAULT_GUARDS)
            total = losses[0]
            for term in losses[1:]:
                total = total + term
            return tape.grad(total, nodes.layers()), len(losses)

        try:
            with ThreadPoolExecutor(max_workers=len(batch)) as pool:
                parts = list(pool.map(one, batch))
        except NonFiniteLoss:
            return None
        count = sum(c for _, c in parts)
        return [
            sum(part[i] for part, _ in parts) / count
            for i in range(len(weights.layers()))
        ]

    tape = Tape()
    nodes = _leaves(tape, weights)
    try:
        loss = unrolled_loss(nodes, batch, ref, config.k_unroll,
                             config.segment, config.gamma)
    except NonFiniteLoss:
        return None
    return tape.grad(loss, nodes.layers())
