"""Problem-set manifests: a JSON description from which a set of problems
is rebuilt deterministically (kind, parameters, and named seed streams)."""
from __future__ import annotations

import json
from pathlib import Path

from ..errors import FormatError
from ..numerics import Rng
from .datasets import parse_csv_numeric, parse_libsvm
from .generators import (
    DEFAULT_INIT_STEP,
    Problem,
    gen_logistic_synthetic,
    gen_quadratic,
    make_logistic,
    make_ridge,
)

MANIFEST_VERSION = 1


def quadratic_suite_manifest(count: int, n: int, seed: int,
                             init_step: float = DEFAULT_INIT_STEP) -> dict:
    return {
        "version": MANIFEST_VERSION,
        "seed": seed,
        "problems": [
            {
                "kind": "quadratic",
                "n": n,
                "stream": f"quad-{i:03d}",
                "init_step": init_step,
            }
            for i in range(count)
        ],
    }


def save_manifest(manifest: dict, path) -> None:
    Path(path).write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


def load_manifest(path) -> dict:
    manifest = json.loads(Path(path).read_text(encoding="utf-8"))
    if manifest.get("version") != MANIFEST_VERSION:
        raise FormatError(f"unsupported manifest version {manifest.get('version')!r}")
    if "seed" not in manifest or "problems" not in manifest:
        raise FormatError("manifest needs 'seed' and 'problems' fields")
    return manifest


def build_problems(manifest: dict, base_dir=None) -> list[Problem]:
    """Instantiate every problem in the manifest, reproducibly from its seed."""
    seed = int(manifest["seed"])
    base = Path(base_dir) if base_dir is not None else Path(".")
    problems = []
    for entry in manifest["problems"]:
        kind = entry["kind"]
        rng = Rng(seed).substream(entry["stream"])
        init_step = float(entry.get("init_step", DEFAULT_INIT_STEP))
        if kind == "quadratic":
            problems.append(
                gen_quadratic(int(entry["n"]), rng, init_step=init_step,
                              label=entry.get("label"))
            )
        elif kind == "logistic-synthetic":
            problems.append(
                gen_logistic_synthetic(
                    int(entry["n"]), int(entry["m_per_class"]),
                    float(entry["reg"]), rng, init_step=init_step,
                    label=entry.get("label"),
                )
            )
        elif kind == "logistic-libsvm":
            path = base / entry["path"]
            with open(path, "r", encoding="utf-8") as fh:
                dataset = parse_libsvm(fh)
            problems.append(
                make_logistic(dataset, float(entry["reg"]), rng,
                              init_step=init_step,
                              label=entry.get("label", f"logistic-{path.name}"))
            )
        elif kind == "ridge-csv":
            path = base / entry["path"]
            with open(path, "r", encoding="utf-8") as fh:
                dataset = parse_csv_numeric(fh, int(entry["target_column"]))
            problems.append(
                make_ridge(dataset, float(entry["reg"]), rng,
                           init_step=init_step,
                           label=entry.get("label", f"ridge-{path.name}"))
            )
        else:
            raise FormatError(f"unknown problem kind {kind!r}")
    return problems
