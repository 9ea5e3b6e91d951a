"""Tape-based reverse-mode differentiation over vector/matrix primitives.

The op functions in this module (`matvec`, `outer`, `dot`, `relu`, ...)
accept either plain numpy arrays / floats or tape `Node` objects and
dispatch accordingly.  Algorithm code written against these ops therefore
runs identically in a fast numpy mode and in a recorded mode, and both
modes share the same underlying numpy expressions, so their values agree
bit for bit.

A `Tape` records nodes in creation order; `Tape.grad` replays them in
strict reverse order, accumulating adjoints.  Values produced from
`detach` participate as constants with zero adjoint.
"""
from __future__ import annotations

import math

import numpy as np

from ..errors import EvalError, ShapeError


class Node:
    """One recorded value.  `parents` pairs each input node with the
    vector-Jacobian product pushing this node's adjoint back to it."""

    __slots__ = ("tape", "value", "parents", "requires_grad", "index")

    # keep numpy from absorbing nodes into object arrays; ndarray <op> Node
    # then defers to the reflected Node operator
    __array_ufunc__ = None

    def __init__(self, tape, value, parents=(), requires_grad=False):
        self.tape = tape
        self.value = value
        self.parents = parents if requires_grad else ()
        self.requires_grad = requires_grad
        self.index = len(tape.nodes)
        tape.nodes.append(self)

    # -- operator sugar (elementwise / scalar arithmetic) --------------
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __repr__(self):
        return f"Node#{self.index}(shape={np.shape(self.value)})"


class Tape:
    """Append-only record of primitive operations.

    Recording and the backward pass must happen on one logical thread;
    independent tapes are safe to use in parallel.
    """

    def __init__(self):
        self.nodes: list[Node] = []

    def leaf(self, value) -> Node:
        """Record a differentiable input (a parameter)."""
        return Node(self, _as_value(value), requires_grad=True)

    def constant(self, value) -> Node:
        """Record a non-differentiable input; its adjoint is always zero."""
        return Node(self, _as_value(value), requires_grad=False)

    def grad(self, output: Node, params) -> list[np.ndarray]:
        """Adjoints of a scalar `output` with respect to each leaf in `params`.

        Leaves not reachable from `output` get a zero adjoint of the
        leaf's shape.
        """
        if output.tape is not self:
            raise ValueError("output was recorded on a different tape")
        if np.shape(output.value) != ():
            raise ShapeError(
                f"grad needs a scalar output, got shape {np.shape(output.value)}"
            )
        adjoints: dict[int, object] = {output.index: 1.0}
        for node in reversed(self.nodes[: output.index + 1]):
            adj = adjoints.get(node.index)
            if adj is None:
                continue
            for parent, vjp in node.parents:
                if not parent.requires_grad:
                    continue
                contribution = vjp(adj)
                slot = adjoints.get(parent.index)
                if slot is None:
                    adjoints[parent.index] = contribution
                else:
                    adjoints[parent.index] = slot + contribution
        out = []
        for p in params:
            g = adjoints.get(p.index)
            if g is None:
                g = np.zeros_like(np.asarray(p.value, dtype=float))
            out.append(np.asarray(g, dtype=float))
        return out


def grad(tape: Tape, output: Node, params) -> list[np.ndarray]:
    return tape.grad(output, params)


# ---------------------------------------------------------------------
# dispatch helpers


def _as_value(x):
    if isinstance(x, np.ndarray):
        return x.astype(float, copy=False)
    if np.isscalar(x):
        return float(x)
    return np.asarray(x, dtype=float)


def is_node(x) -> bool:
    return isinstance(x, Node)


def value_of(x):
    """Underlying numpy value of a node, or the input unchanged."""
    return x.value if isinstance(x, Node) else x


def detach(x):
    """Cut the gradient path: returns a constant with the same value."""
    if isinstance(x, Node):
        return x.tape.constant(x.value)
    return x


def _tape_of(*args) -> Tape:
    for a in args:
        if isinstance(a, Node):
            return a.tape
    raise TypeError("no Node among arguments")


def _wrap(tape, x) -> Node:
    return x if isinstance(x, Node) else tape.constant(_as_value(x))


def _record(tape, value, parents):
    req = any(p.requires_grad for p, _ in parents)
    return Node(tape, value, parents=tuple(parents), requires_grad=req)


# ---------------------------------------------------------------------
# primitives
#
# Each primitive has a raw numpy form used by both the plain path and
# the node path, keeping the two numerically identical.


def add(a, b):
    if not (is_node(a) or is_node(b)):
        return a + b
    tape = _tape_of(a, b)
    a, b = _wrap(tape, a), _wrap(tape, b)
    val = a.value + b.value
    return _record(
        tape,
        val,
        [(a, lambda g, s=np.shape(a.value): _unbroadcast(g, s)),
         (b, lambda g, s=np.shape(b.value): _unbroadcast(g, s))],
    )


def sub(a, b):
    if not (is_node(a) or is_node(b)):
        return a - b
    tape = _tape_of(a, b)
    a, b = _wrap(tape, a), _wrap(tape, b)
    val = a.value - b.value
    return _record(
        tape,
        val,
        [(a, lambda g, s=np.shape(a.value): _unbroadcast(g, s)),
         (b, lambda g, s=np.shape(b.value): _unbroadcast(-g, s))],
    )


def mul(a, b):
    """Elementwise or scalar-broadcast product."""
    if not (is_node(a) or is_node(b)):
        return a * b
    tape = _tape_of(a, b)
    a, b = _wrap(tape, a), _wrap(tape, b)
    av, bv = a.value, b.value
    val = av * bv
    return _record(
        tape,
        val,
        [(a, lambda g: _unbroadcast(g * bv, np.shape(av))),
         (b, lambda g: _unbroadcast(g * av, np.shape(bv)))],
    )


def div(a, b):
    if not (is_node(a) or is_node(b)):
        return a / b
    tape = _tape_of(a, b)
    a, b = _wrap(tape, a), _wrap(tape, b)
    av, bv = a.value, b.value
    val = av / bv
    return _record(
        tape,
        val,
        [(a, lambda g: _unbroadcast(g / bv, np.shape(av))),
         (b, lambda g: _unbroadcast(-g * av / (bv * bv), np.shape(bv)))],
    )


def _unbroadcast(g, shape):
    """Reduce an adjoint back to the shape of the corresponding input."""
    if np.shape(g) == shape:
        return g
    if shape == ():
        return float(np.sum(g))
    # scalar <-> array is the only broadcast these ops allow
    raise ShapeError(f"adjoint shape {np.shape(g)} vs input shape {shape}")


def dot(u, v):
    """Inner product of two vectors -> scalar."""
    if not (is_node(u) or is_node(v)):
        return float(np.dot(u, v))
    tape = _tape_of(u, v)
    u, v = _wrap(tape, u), _wrap(tape, v)
    uv, vv = u.value, v.value
    val = float(np.dot(uv, vv))
    return _record(
        tape, val, [(u, lambda g: g * vv), (v, lambda g: g * uv)]
    )


def matvec(m, v):
    """Matrix-vector product."""
    if not (is_node(m) or is_node(v)):
        return m @ v
    tape = _tape_of(m, v)
    m, v = _wrap(tape, m), _wrap(tape, v)
    mv, vv = m.value, v.value
    val = mv @ vv
    return _record(
        tape,
        val,
        [(m, lambda g: np.outer(g, vv)), (v, lambda g: mv.T @ g)],
    )


def outer(u, v):
    """Outer product of two vectors -> matrix."""
    if not (is_node(u) or is_node(v)):
        return np.outer(u, v)
    tape = _tape_of(u, v)
    u, v = _wrap(tape, u), _wrap(tape, v)
    uv, vv = u.value, v.value
    val = np.outer(uv, vv)
    return _record(
        tape, val, [(u, lambda g: g @ vv), (v, lambda g: g.T @ uv)]
    )


def dense(x, w):
    """Apply a (out, in)-shaped weight to rows of x: ``x @ w.T``."""
    if not (is_node(x) or is_node(w)):
        return x @ w.T
    tape = _tape_of(x, w)
    x, w = _wrap(tape, x), _wrap(tape, w)
    xv, wv = x.value, w.value
    val = xv @ wv.T
    return _record(
        tape, val, [(x, lambda g: g @ wv), (w, lambda g: g.T @ xv)]
    )


def transpose(m):
    if not is_node(m):
        return m.T
    val = m.value.T
    return _record(m.tape, val, [(m, lambda g: g.T)])


def relu(x):
    if not is_node(x):
        return np.maximum(x, 0.0)
    xv = x.value
    val = np.maximum(xv, 0.0)
    mask = xv > 0.0
    return _record(x.tape, val, [(x, lambda g: g * mask)])


def log1p(x):
    if not is_node(x):
        return np.log1p(x)
    xv = x.value
    val = np.log1p(xv)
    return _record(x.tape, val, [(x, lambda g: g / (1.0 + xv))])


def reciprocal(x):
    if not is_node(x):
        return 1.0 / x
    xv = x.value
    val = 1.0 / xv
    return _record(x.tape, val, [(x, lambda g: -g / (xv * xv))])


def _mean_rows_raw(x):
    # math.fsum is exactly rounded, hence invariant to row permutations
    n = x.shape[0]
    return np.array([math.fsum(x[:, j]) for j in range(x.shape[1])]) / n


def mean_rows(x):
    """Column means of a matrix (exact, permutation-invariant summation)."""
    if not is_node(x):
        return _mean_rows_raw(x)
    xv = x.value
    val = _mean_rows_raw(xv)
    n = xv.shape[0]
    return _record(
        x.tape, val, [(x, lambda g: np.broadcast_to(g / n, xv.shape).copy())]
    )


def repeat_rows(v, n):
    """Stack a row vector n times into an (n, len(v)) matrix."""
    if not is_node(v):
        return np.tile(v, (n, 1))
    vv = v.value
    val = np.tile(vv, (n, 1))
    return _record(v.tape, val, [(v, lambda g: g.sum(axis=0))])


def concat_cols(a, b):
    """Horizontally concatenate two matrices with equal row counts."""
    if not (is_node(a) or is_node(b)):
        return np.hstack([a, b])
    tape = _tape_of(a, b)
    a, b = _wrap(tape, a), _wrap(tape, b)
    av, bv = a.value, b.value
    val = np.hstack([av, bv])
    ka = av.shape[1]
    return _record(
        tape, val, [(a, lambda g: g[:, :ka]), (b, lambda g: g[:, ka:])]
    )


def stack_cols(*vectors):
    """Stack vectors of equal length as the columns of a matrix."""
    if not any(is_node(v) for v in vectors):
        return np.column_stack(vectors)
    tape = _tape_of(*vectors)
    nodes = [_wrap(tape, v) for v in vectors]
    val = np.column_stack([nd.value for nd in nodes])
    parents = [
        (nd, lambda g, jj=j: g[:, jj]) for j, nd in enumerate(nodes)
    ]
    return _record(tape, val, parents)


def column(m, j):
    """Extract column j of a matrix as a (contiguous) vector."""
    if not is_node(m):
        return np.ascontiguousarray(m[:, j])
    mv = m.value
    val = np.ascontiguousarray(mv[:, j])

    def vjp(g):
        out = np.zeros_like(mv)
        out[:, j] = g
        return out

    return _record(m.tape, val, [(m, vjp)])


# ---------------------------------------------------------------------
# finite differences (the gradient-check oracle)


def finite_diff_grad(f, x, h=1e-6):
    """Central-difference gradient of a scalar function at x."""
    if h <= 0:
        raise ValueError("h must be positive")
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        fp = f(x + e)
        fm = f(x - e)
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise EvalError(f"non-finite evaluation at coordinate {i}")
        g[i] = (fp - fm) / (2.0 * h)
    return g
