"""Problem generation, dataset ingestion, and manifest reproduction."""

from .datasets import (
    Dataset,
    parse_csv_numeric,
    parse_libsvm,
    scan_libsvm_counts,
    serialize_libsvm,
    standardize_columns,
)
from .generators import (
    DEFAULT_INIT_STEP,
    Problem,
    QuadraticSpec,
    gen_logistic_synthetic,
    gen_quadratic,
    make_init_pair,
    make_logistic,
    make_ridge,
)
from .manifest import (
    build_problems,
    load_manifest,
    quadratic_suite_manifest,
    save_manifest,
)

__all__ = [
    "Dataset",
    "DEFAULT_INIT_STEP",
    "Problem",
    "QuadraticSpec",
    "build_problems",
    "gen_logistic_synthetic",
    "gen_quadratic",
    "load_manifest",
    "make_init_pair",
    "make_logistic",
    "make_ridge",
    "parse_csv_numeric",
    "parse_libsvm",
    "quadratic_suite_manifest",
    "save_manifest",
    "scan_libsvm_counts",
    "serialize_libsvm",
    "standardize_columns",
]
