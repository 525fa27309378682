"""Command line interface: dataset generation, reduction, evaluation, benchmarks.

Matrices travel as headerless CSV (row-major, 17 significant digits, so values
round-trip exactly).  Every command writes a flat ``key = value`` sidecar
capturing its full configuration, which makes any output reproducible from the
sidecar alone.  Timings are printed to stdout and never written into output
files, so reruns of the same configuration are byte-identical.

Exit codes: 0 success, 2 bad command line, 3 bad or degenerate data,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np

from .core import ikd
from .errors import DataError, IKDError, NumericalError
from .evaluate import affine_align, knn_cv, pca_baseline
from .kernels import KernelSpec
from .synthgen import DEFAULT_NOISE, generate_dataset

REPORT_HEADER = "method,dataset,N,M,trial,metric,value"
_DEFAULT_M = {"gp": 3, "sinusoid": 1, "bump": 2}


def write_matrix(path, A) -> None:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for row in A:
            f.write(",".join(format(v, ".17g") for v in row) + "\n")


def read_matrix(path) -> np.ndarray:
    rows = []
    width = None
    try:
        with open(path, "r", encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                line = line.strip()
                if not line:
                    continue
                parts = line.split(",")
                try:
                    values = [float(p) for p in parts]
                except ValueError as exc:
                    raise DataError(f"{path}: line {lineno}: {exc}") from exc
                if width is None:
                    width = len(values)
                elif len(values) != width:
                    raise DataError(
                        f"{path}: line {lineno} has {len(values)} values, expected {width}"
                    )
                rows.append(values)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path}: no data rows")
    return np.asarray(rows, dtype=float)


def write_sidecar(path, pairs: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for key in sorted(pairs):
            f.write(f"{key} = {pairs[key]}\n")


def _out_dir(args) -> Path:
    base = args.out if args.out is not None else os.environ.get("IKD_OUTPUT_DIR", ".")
    path = Path(base)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _kernel_from_args(args) -> KernelSpec:
    return KernelSpec(args.kernel, alpha=args.alpha, gamma=args.gamma, nu=args.nu)


def _add_kernel_flags(parser) -> None:
    parser.add_argument("--kernel", default="se",
                        choices=["se", "rq", "gamma_exp", "matern"],
                        help="kernel family assumed for inversion")
    parser.add_argument("--alpha", type=float, default=1.0, help="rational quadratic shape")
    parser.add_argument("--gamma", type=float, default=1.0, help="gamma-exponential exponent")
    parser.add_argument("--nu", type=float, default=1.5, help="Matern smoothness")


def _append_report(path, rows) -> None:
    path = Path(path)
    new_file = not path.exists()
    with open(path, "a", encoding="utf-8", newline="\n") as f:
        if new_file:
            f.write(REPORT_HEADER + "\n")
        for method, dataset, n, m, trial, metric, value in rows:
            f.write(f"{method},{dataset},{n},{m},{trial},{metric},{format(value, '.17g')}\n")


def cmd_generate(args) -> int:
    out = _out_dir(args)
    ds = generate_dataset(
        args.mapping,
        T=args.T,
        M=args.M if args.M is not None else _DEFAULT_M[args.mapping],
        N=args.N,
        seed=args.seed,
        noise_sd=args.noise_sd,
        sigma2=args.sigma2,
        length_scale=args.length_scale,
    )
    write_matrix(out / "X.csv", ds.observations)
    write_matrix(out / "Z_true.csv", ds.latent)
    meta = {"command": "generate", "mapping": ds.mapping, "seed": ds.seed}
    meta.update(ds.params)
    write_sidecar(out / "meta.txt", meta)
    print(f"generate: wrote {out / 'X.csv'}, {out / 'Z_true.csv'}, {out / 'meta.txt'}")
    return 0


def cmd_reduce(args) -> int:
    out = _out_dir(args)
    X = read_matrix(args.data)
    started = time.perf_counter()
    diagnostics = {
        "command": "reduce",
        "method": args.method,
        "data": args.data,
        "n_components": args.M,
    }
    if args.method == "ikd":
        spec = _kernel_from_args(args)
        est = ikd(X, spec, n_components=args.M, strategy=args.strategy, s0_rel=args.s0_rel)
        Z = est.coords
        diagnostics.update(
            kernel=spec.family,
            strategy=args.strategy,
            s0_rel=args.s0_rel,
            reference_index=est.reference,
            eigenvalues=",".join(format(v, ".17g") for v in est.eigenvalues),
            discarded_negative=est.n_discarded_negative,
            padded=est.padded,
            degenerate_spectrum=est.degenerate_spectrum,
        )
        if spec.family == "rq":
            diagnostics["alpha"] = spec.alpha
        elif spec.family == "gamma_exp":
            diagnostics["gamma"] = spec.gamma
        elif spec.family == "matern":
            diagnostics["nu"] = spec.nu
    else:
        Z = pca_baseline(X, args.M)
    elapsed = time.perf_counter() - started
    write_matrix(out / "Z_est.csv", Z)
    write_sidecar(out / "diagnostics.txt", diagnostics)
    print(f"reduce: wrote {out / 'Z_est.csv'} ({elapsed:.3f} s)")
    return 0


def cmd_eval(args) -> int:
    out = _out_dir(args)
    Z = read_matrix(args.latent)
    report = Path(args.report) if args.report else out / "report.csv"
    dataset = args.dataset_label or Path(args.latent).stem
    rows = []
    if args.metric == "r2":
        if not args.truth:
            raise DataError("--truth is required for the r2 metric")
        truth = read_matrix(args.truth)
        if truth.shape != Z.shape:
            raise DataError(f"latent shape {Z.shape} does not match truth shape {truth.shape}")
        result = affine_align(Z, truth)
        rows.append((args.method_label, dataset, args.n_cols, Z.shape[1],
                     args.trial, "r2", result.r2_mean))
        print(f"eval: r2 = {result.r2_mean:.6f} "
              f"(per dim: {', '.join(format(v, '.4f') for v in result.r2_per_dim)})")
    else:
        if not args.labels:
            raise DataError("--labels is required for the knn metric")
        labels = read_matrix(args.labels).ravel()
        if labels.size != Z.shape[0]:
            raise DataError(f"{Z.shape[0]} latent rows but {labels.size} labels")
        for k in args.k:
            acc = knn_cv(Z, labels.astype(int), k=k, folds=args.folds, seed=args.seed)
            rows.append((args.method_label, dataset, args.n_cols, Z.shape[1],
                         args.trial, f"knn_k{k}", acc))
            print(f"eval: knn accuracy (k={k}) = {acc:.6f}")
    _append_report(report, rows)
    print(f"eval: appended {len(rows)} row(s) to {report}")
    return 0


def run_sweep(mapping: str, T: int, M: int, n_list, trials: int, methods,
              spec: KernelSpec, strategy: str, s0_rel: float, seed: int,
              noise_sd: float | None = None):
    """Generate/reduce/eval over a grid of observation dimensionalities.

    Returns (rows, timings): report rows, and per (method, N) lists of
    wall-clock seconds for the reduce step.  Failures are recorded as NaN
    rows and the sweep continues.
    """
    rows = []
    timings: dict[tuple[str, int], list[float]] = {}
    for n in n_list:
        for trial in range(trials):
            ds = generate_dataset(mapping, T=T, M=M, N=n, seed=seed + trial, noise_sd=noise_sd)
            for method in methods:
                started = time.perf_counter()
                try:
                    if method == "ikd":
                        Z = ikd(ds.observations, spec, n_components=M,
                                strategy=strategy, s0_rel=s0_rel).coords
                    elif method == "pca":
                        Z = pca_baseline(ds.observations, M)
                    else:
                        raise DataError(f"unknown method {method!r}")
                    r2 = affine_align(Z, ds.latent).r2_mean
                except IKDError as exc:
                    print(f"warning: {method} failed on {mapping} N={n} trial={trial}: {exc}",
                          file=sys.stderr)
                    r2 = float("nan")
                elapsed = time.perf_counter() - started
                timings.setdefault((method, n), []).append(elapsed)
                rows.append((method, mapping, n, M, trial, "r2", r2))
    return rows, timings


def cmd_bench(args) -> int:
    out = _out_dir(args)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    n_list = [int(v) for v in args.N_list.split(",") if v.strip()]
    if not methods or not n_list or args.trials < 1:
        raise DataError("benchmark sweep needs methods, N values and trials >= 1")
    spec = _kernel_from_args(args)
    M = args.M if args.M is not None else _DEFAULT_M[args.mapping]
    rows, timings = run_sweep(
        args.mapping, args.T, M, n_list, args.trials, methods,
        spec, args.strategy, args.s0_rel, args.seed, args.noise_sd,
    )
    report = out / "report.csv"
    with open(report, "w", encoding="utf-8", newline="\n") as f:
        f.write(REPORT_HEADER + "\n")
        for method, dataset, n, m, trial, metric, value in rows:
            f.write(f"{method},{dataset},{n},{m},{trial},{metric},{format(value, '.17g')}\n")
    for n in n_list:
        for method in methods:
            values = [v for me, da, nn, mm, tr, met, v in rows
                      if me == method and nn == n and np.isfinite(v)]
            times = timings.get((method, n), [])
            mean = np.mean(values) if values else float("nan")
            std = np.std(values) if values else float("nan")
            print(f"bench: mapping={args.mapping} N={n} method={method} "
                  f"r2 = {mean:.4f} +- {std:.4f} "
                  f"({len(values)}/{args.trials} ok, {np.mean(times):.3f} s/reduce)")
    print(f"bench: wrote {report}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ikd",
        description="Dimensionality reduction via inverse kernel decomposition",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic dataset as CSV")
    p.add_argument("--mapping", required=True, choices=sorted(DEFAULT_NOISE))
    p.add_argument("--T", type=int, default=300, help="number of points")
    p.add_argument("--M", type=int, default=None, help="latent dimensionality")
    p.add_argument("--N", type=int, default=100, help="observation dimensionality")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-sd", dest="noise_sd", type=float, default=None,
                   help="observation noise (default depends on the mapping)")
    p.add_argument("--sigma2", type=float, default=1.0, help="gp mapping marginal variance")
    p.add_argument("--length-scale", dest="length_scale", type=float, default=3.0,
                   help="gp mapping length-scale")
    p.add_argument("--out", default=None, help="output directory (default: $IKD_OUTPUT_DIR or .)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("reduce", help="estimate latent coordinates from X.csv")
    p.add_argument("--data", required=True, help="path to the observation CSV")
    p.add_argument("--method", default="ikd", choices=["ikd", "pca"])
    p.add_argument("--M", type=int, required=True, help="latent dimensionality")
    p.add_argument("--strategy", default="none", choices=["none", "geodesic", "blockwise"])
    p.add_argument("--s0-rel", dest="s0_rel", type=float, default=0.01,
                   help="covariance threshold relative to the estimated marginal variance")
    _add_kernel_flags(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("eval", help="score an estimated latent")
    p.add_argument("--latent", required=True, help="path to Z_est.csv")
    p.add_argument("--metric", default="r2", choices=["r2", "knn"])
    p.add_argument("--truth", default=None, help="path to Z_true.csv (r2 metric)")
    p.add_argument("--labels", default=None, help="path to integer labels CSV (knn metric)")
    p.add_argument("--k", type=lambda s: [int(v) for v in s.split(",")], default=[5, 10, 20],
                   help="comma-separated neighbour counts")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", default=None, help="report CSV to append to")
    p.add_argument("--method-label", dest="method_label", default="-")
    p.add_argument("--dataset-label", dest="dataset_label", default=None)
    p.add_argument("--trial", type=int, default=0)
    p.add_argument("--n", dest="n_cols", type=int, default=-1,
                   help="observation dimensionality to record in the report")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="generate/reduce/eval sweep over N")
    p.add_argument("--mapping", required=True, choices=sorted(DEFAULT_NOISE))
    p.add_argument("--T", type=int, default=300)
    p.add_argument("--M", type=int, default=None)
    p.add_argument("--N-list", dest="N_list", default="10,50,100,500")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--methods", default="ikd,pca")
    p.add_argument("--strategy", default="none", choices=["none", "geodesic", "blockwise"])
    p.add_argument("--s0-rel", dest="s0_rel", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-sd", dest="noise_sd", type=float, default=None)
    _add_kernel_flags(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except np.linalg.LinAlgError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
