"""Dense small-scale numerics: seeded RNG, symmetric eigensolver, and a
tape-based reverse-mode differentiation engine."""

from .autodiff import (
    Node,
    Tape,
    add,
    column,
    concat_cols,
    dense,
    detach,
    dot,
    div,
    finite_diff_grad,
    grad,
    is_node,
    log1p,
    matvec,
    mean_rows,
    mul,
    outer,
    reciprocal,
    relu,
    repeat_rows,
    stack_cols,
    sub,
    transpose,
    value_of,
)
from .eigen import check_symmetric, sym_eigen, sym_eigenvalues
from .rng import Rng

__all__ = [
    "Node",
    "Tape",
    "Rng",
    "add",
    "column",
    "concat_cols",
    "dense",
    "detach",
    "dot",
    "div",
    "finite_diff_grad",
    "grad",
    "is_node",
    "log1p",
    "matvec",
    "mean_rows",
    "mul",
    "outer",
    "reciprocal",
    "relu",
    "repeat_rows",
    "stack_cols",
    "sub",
    "transpose",
    "value_of",
    "check_symmetric",
    "sym_eigen",
    "sym_eigenvalues",
]
