"""Command-line entry point.

Subcommands: ``gen-data`` (write a reproducible problem manifest),
``train`` (unrolled training with checkpoints and loss curves), ``bench``
(run algorithms over problems, write trajectories / summary / charts),
``eval`` (thin single-pass benchmark without charts), ``equiv-check``
(reproduce the invariance/equivariance matrix), and ``report`` (collect
bench summaries into Markdown).

Exit codes: 0 success, 1 expected-value mismatch, 2 usage error,
3 runtime divergence.  Every command echoes its resolved configuration
to ``<outdir>/config.json`` before doing work, and all randomness flows
from ``--seed`` through labelled sub-streams.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import model as model_io
from .baselines import adam_spec, classical_bfgs_spec, gd_spec, heavy_ball_spec, newton_spec
from .equivariance import build_table1
from .errors import DivergenceError, QnLearnError, TrainingDiverged
from .framework import run
from .learned_bfgs import learned_spec
from .linesearch import LineSearchConfig
from .plotting import svg_line_chart
from .problems import build_problems, load_manifest, quadratic_suite_manifest, save_manifest
from .training import LOG2, TrainConfig, train

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_USAGE = 2
EXIT_DIVERGED = 3

ALGORITHM_NAMES = ("gd", "hb", "newton", "adam", "bfgs", "loa-bfgs")


class UsageError(Exception):
    pass


def _echo_config(outdir: Path, args: argparse.Namespace) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    resolved = {k: v for k, v in vars(args).items() if k != "func"}
    resolved = {k: (str(v) if isinstance(v, Path) else v)
                for k, v in resolved.items()}
    (outdir / "config.json").write_text(
        json.dumps(resolved, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _build_algorithm(name: str, gamma: float, weights_path):
    if name == "gd":
        return gd_spec(gamma=gamma)
    if name == "hb":
        return heavy_ball_spec(gamma=gamma)
    if name == "newton":
        return newton_spec()
    if name == "adam":
        return adam_spec(gamma=gamma)
    if name == "bfgs":
        return classical_bfgs_spec(gamma=gamma)
    if name == "loa-bfgs":
        if weights_path is None:
            raise UsageError("algorithm 'loa-bfgs' needs --weights <file>")
        return learned_spec(model_io.load_weights(weights_path), gamma=gamma)
    raise UsageError(
        f"unknown algorithm {name!r}; choose from {', '.join(ALGORITHM_NAMES)}"
    )


def _safe_name(label: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in label)


def cmd_gen_data(args) -> int:
    outdir = Path(args.out)
    _echo_config(outdir, args)
    manifest = quadratic_suite_manifest(args.count, args.n, args.seed,
                                        init_step=args.init_step)
    save_manifest(manifest, outdir / "problems.json")
    print(f"wrote manifest with {args.count} quadratics (n={args.n}) to "
          f"{outdir / 'problems.json'}")
    return EXIT_OK


def cmd_train(args) -> int:
    outdir = Path(args.out)
    _echo_config(outdir, args)
    manifest = load_manifest(args.problems)
    problems = build_problems(manifest, base_dir=Path(args.problems).parent)
    test_problems = None
    if args.test_problems:
        test_manifest = load_manifest(args.test_problems)
        test_problems = build_problems(
            test_manifest, base_dir=Path(args.test_problems).parent
        )
    config = TrainConfig(
        k_unroll=args.k, segment=args.segment, batch_size=args.batch_size,
        clip_norm=args.clip_norm, epochs=args.epochs, seed=args.seed,
        gamma=args.gamma, coincident_init=not args.no_coincident_init,
    )
    try:
        result = train(config, problems, test_problems=test_problems)
    except TrainingDiverged as exc:
        checkpoint = exc.checkpoint
        path = outdir / "last_good_weights.json"
        if checkpoint is not None:
            model_io.save_weights(checkpoint.best_weights, path)
            _write_history(outdir, checkpoint.history)
        print(f"training diverged: {exc}; last good checkpoint at {path}",
              file=sys.stderr)
        return EXIT_DIVERGED

    model_io.save_weights(result.best_weights, outdir / "best_weights.json")
    (outdir / "best_checkpoint.json").write_text(
        json.dumps({"epoch": result.best_epoch, "mean_loss": result.best_loss})
        + "\n",
        encoding="utf-8",
    )
    _write_history(outdir, result.history)
    print(f"epoch 0 loss {result.history[0][1]:.12f} (log 2 = {LOG2:.12f})")
    print(f"best epoch {result.best_epoch} with mean loss {result.best_loss:.6f}")
    return EXIT_OK


def _write_history(outdir: Path, history) -> None:
    lines = ["epoch,mean_train_loss,mean_test_loss"]
    curve = ["epoch,mean_train_loss,mean_test_loss,log2_reference"]
    for epoch, train_loss, test_loss in history:
        test_cell = "" if test_loss is None else repr(test_loss)
        lines.append(f"{epoch},{train_loss!r},{test_cell}")
        curve.append(f"{epoch},{train_loss!r},{test_cell},{LOG2!r}")
    (outdir / "loss_history.csv").write_text("\n".join(lines) + "\n",
                                             encoding="utf-8")
    (outdir / "training_curve.csv").write_text("\n".join(curve) + "\n",
                                               encoding="utf-8")


def _bench_once(args, write_charts: bool) -> int:
    outdir = Path(args.out)
    _echo_config(outdir, args)
    manifest = load_manifest(args.problems)
    problems = build_problems(manifest, base_dir=Path(args.problems).parent)
    names = [a.strip() for a in args.algos.split(",") if a.strip()]
    specs = {name: _build_algorithm(name, args.gamma, args.weights)
             for name in names}
    line_search = LineSearchConfig() if args.line_search else None

    summary = {"k": args.k, "gamma": args.gamma, "seed": args.seed, "runs": []}
    failures = 0
    per_problem_series = {p.label: {} for p in problems}
    iter_times = {name: [] for name in names}
    for problem in problems:
        for name, spec in specs.items():
            if spec.needs_hessian and problem.hessian is None:
                continue
            entry = {"problem": problem.label, "algorithm": name}
            try:
                traj = run(spec, problem, args.k, line_search=line_search,
                           record_eigen=args.record_eigen)
            except DivergenceError as exc:
                failures += 1
                entry["diverged"] = True
                entry["error"] = str(exc)
                traj = exc.trajectory
            else:
                entry["diverged"] = False
                f0_gap = traj.f_values[0] - (problem.f_star or 0.0)
                final_gap = traj.f_values[-1] - (problem.f_star or 0.0)
                entry["final_relative_suboptimality"] = (
                    final_gap / f0_gap if f0_gap > 0 else None
                )
                entry["final_grad_norm"] = traj.grad_norms[-1]
                iter_times[name].append(traj.wall_time / max(traj.k_max, 1))
            if traj is not None:
                csv_path = outdir / (
                    f"traj__{_safe_name(name)}__{_safe_name(problem.label)}.csv"
                )
                csv_path.write_text(traj.to_csv(problem.f_star),
                                    encoding="utf-8")
                if problem.f_star is not None and traj.f_values:
                    f0_gap = traj.f_values[0] - problem.f_star
                    if f0_gap > 0:
                        per_problem_series[problem.label][name] = [
                            (k, (f - problem.f_star) / f0_gap)
                            for k, f in enumerate(traj.f_values)
                        ]
            summary["runs"].append(entry)

    # per-iteration cost relative to gradient descent, no acceptance target
    mean_times = {n: (sum(ts) / len(ts) if ts else None)
                  for n, ts in iter_times.items()}
    gd_time = mean_times.get("gd")
    summary["seconds_per_iteration"] = mean_times
    if gd_time:
        summary["time_relative_to_gd"] = {
            n: (t / gd_time if t else None) for n, t in mean_times.items()
        }
    (outdir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n",
                                         encoding="utf-8")

    if write_charts:
        for label, series in per_problem_series.items():
            if not series:
                continue
            svg = svg_line_chart(
                series, title=label, xlabel="iteration",
                ylabel="relative sub-optimality", log_y=True,
            )
            (outdir / f"bench__{_safe_name(label)}.svg").write_text(
                svg, encoding="utf-8"
            )

    total = len(summary["runs"])
    print(f"{total - failures}/{total} runs finished; summary in "
          f"{outdir / 'summary.json'}")
    if total > 0 and failures == total:
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_bench(args) -> int:
    return _bench_once(args, write_charts=True)


def cmd_eval(args) -> int:
    return _bench_once(args, write_charts=False)


def cmd_equiv_check(args) -> int:
    outdir = Path(args.out)
    _echo_config(outdir, args)
    weights = model_io.load_weights(args.weights) if args.weights else None
    matrix = build_table1(k_run=args.k, tol=args.tol, seed=args.seed,
                          weights=weights)
    (outdir / "table1.md").write_text(matrix.to_markdown(), encoding="utf-8")
    (outdir / "table1.json").write_text(matrix.to_json() + "\n",
                                        encoding="utf-8")
    mismatches = matrix.mismatches()
    if mismatches:
        for (algo, kind), expected, got in mismatches:
            print(f"mismatch: {algo} x {kind}: expected {expected}, got {got}",
                  file=sys.stderr)
        return EXIT_MISMATCH
    print(f"all {len(matrix.cells)} cells match the expected matrix")
    return EXIT_OK


def cmd_report(args) -> int:
    outdir = Path(args.out)
    _echo_config(outdir, args)
    rows = []
    for summary_path in sorted(Path(args.inputs).glob("**/summary.json")):
        data = json.loads(summary_path.read_text(encoding="utf-8"))
        for entry in data.get("runs", []):
            rows.append((
                entry.get("problem"), entry.get("algorithm"),
                entry.get("final_relative_suboptimality"),
                entry.get("diverged"),
            ))
    lines = [
        "# Benchmark report", "",
        "| problem | algorithm | final relative sub-optimality | diverged |",
        "|---|---|---|---|",
    ]
    for problem, algo, gap, diverged in rows:
        gap_text = "-" if gap is None else f"{gap:.3e}"
        lines.append(f"| {problem} | {algo} | {gap_text} | {diverged} |")
    (outdir / "report.md").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"report over {len(rows)} runs written to {outdir / 'report.md'}")
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=str, default="out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qnlearn",
        description="learned quasi-Newton optimization toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="write a reproducible problem manifest")
    _add_common(p)
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--init-step", type=float, default=1e-3)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="unrolled training of the prediction network")
    _add_common(p)
    p.add_argument("--problems", type=str, required=True,
                   help="problem manifest JSON")
    p.add_argument("--test-problems", type=str, default=None)
    p.add_argument("--k", type=int, default=40, help="unroll length")
    p.add_argument("--segment", type=int, default=5)
    p.add_argument("--batch-size", type=int, default=2)
    p.add_argument("--clip-norm", type=float, default=1.0)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--no-coincident-init", action="store_true")
    p.set_defaults(func=cmd_train)

    for name, fn, help_text in (
        ("bench", cmd_bench, "run algorithms over problems, write artifacts"),
        ("eval", cmd_eval, "bench without charts"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        p.add_argument("--problems", type=str, required=True)
        p.add_argument("--algos", type=str, default="bfgs,loa-bfgs")
        p.add_argument("--k", type=int, default=100)
        p.add_argument("--gamma", type=float, default=1.0)
        p.add_argument("--line-search", action="store_true")
        p.add_argument("--weights", type=str, default=None)
        p.add_argument("--record-eigen", action="store_true")
        p.set_defaults(func=fn)

    p = sub.add_parser("equiv-check",
                       help="reproduce the equivariance verdict matrix")
    _add_common(p)
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--weights", type=str, default=None)
    p.set_defaults(func=cmd_equiv_check)

    p = sub.add_parser("report", help="collect bench summaries into Markdown")
    _add_common(p)
    p.add_argument("--inputs", type=str, default="out")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))  # exits 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except QnLearnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISMATCH


if __name__ == "__main__":
    sys.exit(main())
