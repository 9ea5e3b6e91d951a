"""qnlearn: a learned quasi-Newton optimization toolkit.

Pieces: a generic oracle/model/update/storage runner, hand-crafted
baselines, a 216-parameter coordinate-wise prediction network, the
learning-enhanced BFGS method it drives, unrolled training against a
classical-BFGS reference, and an executable equivariance/descent test
harness.
"""

from . import (
    baselines,
    equivariance,
    framework,
    learned_bfgs,
    linesearch,
    model,
    numerics,
    plotting,
    problems,
    training,
    transforms,
)
from .errors import QnLearnError

__version__ = "0.1.0"

__all__ = [
    "QnLearnError",
    "baselines",
    "equivariance",
    "framework",
    "learned_bfgs",
    "linesearch",
    "model",
    "numerics",
    "plotting",
    "problems",
    "training",
    "transforms",
    "__version__",
]
