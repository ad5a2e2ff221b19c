"""Command line interface.

Subcommands
-----------
simulate     draw an ordinal dataset from the generative model
fit          estimate a model from a CSV dataset, with standard errors
study        run a replicated simulation study from a JSON config
bench-grad   time the analytic score against a finite-difference gradient
bench-kernel time the compiled kernel backend against the NumPy fallback
rerun        re-execute a command from a previously written manifest

Datasets are headerless CSV files of integers (one row per observation, q
columns, categories 1-based).  Reports are JSON; each primary output file
is accompanied by ``<file>.manifest.json`` recording the command, its full
configuration, the seed, the package version and per-phase wall-clock
timings.  Primary outputs contain nothing time-dependent, so identical
configuration and seed reproduce them byte for byte.

Exit codes: 0 on success (including fits that did not converge, which
still produce a report plus a warning on stderr), 2 on usage or validation
errors, 1 on runtime failures.
"""

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__, gauss
from .counts import OrdinalDataset, compute_counts
from .fit import EstimationError, FitConfig, fit_dataset
from .godambe import godambe_matrices, wald_intervals, z_multiplier
from .model import (ModelDims, ThresholdSet, pack_theta, parameter_names,
                    unpack_theta)
from .pairwise import loglik_and_score, pairwise_loglik, pairwise_score
from .simulate import (StudyConfig, random_sparse_correlation, run_study,
                       sample_dataset)


class CliError(Exception):
    """Validation failure: reported on stderr, exit code 2."""


def _write_atomic(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _np_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _json_dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_np_default) + "\n"


def _write_manifest(path: str, command: str, config: dict, seed,
                    timings: dict) -> None:
    manifest = {
        "command": command,
        "config": config,
        "seed": seed,
        "version": __version__,
        "timings_seconds": timings,
    }
    _write_atomic(path + ".manifest.json", _json_dumps(manifest))


def _parse_threshold_menu(text: str, k: int):
    """Parse '0,0.5,1;-1,0,1' into a tuple of threshold vectors."""
    menu = []
    for part in text.split(";"):
        cuts = tuple(float(tok) for tok in part.split(",") if tok.strip())
        if len(cuts) != k - 1:
            raise CliError(
                f"threshold vector {part!r} has {len(cuts)} entries, "
                f"need {k - 1} for k={k}")
        if any(b <= a for a, b in zip(cuts, cuts[1:])):
            raise CliError(f"threshold vector {part!r} is not increasing")
        menu.append(cuts)
    return tuple(menu)


def _default_menu(k: int):
    if k == 4:
        return ((0.0, 0.5, 1.0), (-1.0, 0.0, 1.0))
    raise CliError(
        f"no default threshold menu for k={k}; pass --thresholds")


def _load_dataset(path: str, k: int | None) -> OrdinalDataset:
    rows = []
    width = None
    try:
        fh = open(path)
    except OSError as exc:
        raise CliError(f"cannot open dataset {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            toks = line.split(",")
            try:
                row = [int(tok) for tok in toks]
            except ValueError as exc:
                raise CliError(f"{path}: line {lineno}: {exc}") from exc
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise CliError(
                    f"{path}: line {lineno}: expected {width} columns, "
                    f"got {len(row)}")
            rows.append(row)
    if not rows:
        raise CliError(f"{path}: dataset is empty")
    arr = np.asarray(rows, dtype=np.int64)
    if k is None:
        k = int(arr.max())
    try:
        return OrdinalDataset(arr, k=k)
    except ValueError as exc:
        raise CliError(f"{path}: {exc}") from exc


def _dataset_csv(data: OrdinalDataset) -> str:
    return "\n".join(",".join(str(v) for v in row) for row in data.rows) + "\n"


# ----------------------------------------------------------------- simulate

def cmd_simulate(args) -> int:
    if args.n < 1:
        raise CliError(f"--n must be positive, got {args.n}")
    if args.q < 2:
        raise CliError(f"--q must be at least 2, got {args.q}")
    if args.k < 2:
        raise CliError(f"--k must be at least 2, got {args.k}")
    if not 0.0 <= args.zero_frac < 1.0:
        raise CliError(f"--zero-frac must lie in [0, 1), got {args.zero_frac}")
    menu = (_parse_threshold_menu(args.thresholds, args.k)
            if args.thresholds else _default_menu(args.k))

    t0 = time.perf_counter()
    root = np.random.SeedSequence(args.seed)
    rng = np.random.default_rng(root.spawn(1)[0])
    sigma = random_sparse_correlation(args.q, args.zero_frac, rng)
    picks = rng.integers(0, len(menu), size=args.q)
    thresholds = ThresholdSet(np.asarray(menu)[picks])
    data = sample_dataset(sigma, thresholds, args.n,
                          np.random.default_rng(root.spawn(1)[0]))
    t_sim = time.perf_counter() - t0

    config = {"q": args.q, "k": args.k, "n": args.n,
              "zero_frac": args.zero_frac, "seed": args.seed,
              "thresholds": [list(c) for c in menu]}
    data_path = args.out_prefix + "_data.csv"
    truth_path = args.out_prefix + "_truth.json"
    truth = {
        "correlation_matrix": sigma.matrix().tolist(),
        "rhos": sigma.rhos.tolist(),
        "thresholds": thresholds.cuts.tolist(),
        "q": args.q, "k": args.k, "n": args.n,
    }
    _write_atomic(data_path, _dataset_csv(data))
    _write_atomic(truth_path, _json_dumps(truth))
    for path in (data_path, truth_path):
        _write_manifest(path, "simulate", config, args.seed,
                        {"simulate": t_sim})
    print(f"wrote {data_path} ({args.n} x {args.q}) and {truth_path}")
    return 0


# ---------------------------------------------------------------------- fit

def _fit_report(data: OrdinalDataset, level: float, config: FitConfig):
    dims = data.dims()
    counts = compute_counts(data, dims)
    result = fit_dataset(data, config)
    mats = godambe_matrices(result.theta_hat, data, counts)
    intervals = wald_intervals(result.theta_hat, mats.g_hat, dims, level)
    names = parameter_names(dims)
    report = {
        "n": dims.n, "q": dims.q, "k": dims.k,
        "loglik": result.loglik,
        "converged": result.converged,
        "iterations": result.iterations,
        "gradient_norm": result.gradient_norm,
        "sigma_pd": result.sigma_pd,
        "underflow_count": result.underflow_count,
        "level": level,
        "z_multiplier": z_multiplier(level),
        "parameters": [
            {"name": nm,
             "estimate": iv.estimate,
             "std_error": iv.std_error,
             "lower": iv.lower,
             "upper": iv.upper}
            for nm, iv in zip(names, intervals)
        ],
        "godambe": {
            "J": mats.j_hat.tolist(),
            "H": mats.h_hat.tolist(),
            "G": mats.g_hat.tolist(),
            "j_singular": mats.j_singular,
        },
    }
    return report, result


def cmd_fit(args) -> int:
    if not 0.0 < args.level < 1.0:
        raise CliError(f"--level must lie in (0, 1), got {args.level}")
    data = _load_dataset(args.data, args.k)
    t0 = time.perf_counter()
    try:
        report, result = _fit_report(data, args.level,
                                     FitConfig(max_iterations=args.max_iter))
    except EstimationError as exc:
        raise CliError(str(exc)) from exc
    t_fit = time.perf_counter() - t0
    text = _json_dumps(report)
    if args.out:
        _write_atomic(args.out, text)
        _write_manifest(args.out, "fit",
                        {"data": args.data, "k": data.k, "level": args.level,
                         "max_iter": args.max_iter, "out": args.out},
                        None, {"fit": t_fit})
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    if not result.converged:
        print("warning: optimizer did not reach the gradient tolerance "
              f"(|grad| = {result.gradient_norm:.3e})", file=sys.stderr)
    return 0


# -------------------------------------------------------------------- study

def _study_config_from_dict(cfg: dict) -> StudyConfig:
    try:
        return StudyConfig(
            q=int(cfg["q"]),
            k=int(cfg["k"]),
            sample_sizes=tuple(int(n) for n in cfg["sample_sizes"]),
            replicates=int(cfg["replicates"]),
            level=float(cfg.get("level", 0.95)),
            zero_fraction=float(cfg.get("zero_fraction", 0.3)),
            threshold_menu=tuple(tuple(float(c) for c in cuts)
                                 for cuts in cfg["threshold_menu"]),
            seed=int(cfg.get("seed", 0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CliError(f"invalid study config: {exc}") from exc


def cmd_study(args) -> int:
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read study config {args.config}: {exc}") from exc
    config = _study_config_from_dict(cfg)
    n_jobs = 1 if args.serial else -1
    t0 = time.perf_counter()
    result = run_study(config, n_jobs=n_jobs)
    t_study = time.perf_counter() - t0
    report = {
        "config": {
            "q": config.q, "k": config.k,
            "sample_sizes": list(config.sample_sizes),
            "replicates": config.replicates,
            "level": config.level,
            "zero_fraction": config.zero_fraction,
            "threshold_menu": [list(c) for c in config.threshold_menu],
            "seed": config.seed,
        },
        "parameter_names": result.parameter_names,
        "theta_true": result.scenarios[0].theta_true.tolist(),
        "scenarios": [
            {"n": sc.n,
             "mse": sc.mse.tolist(),
             "mean_std_error": sc.mean_std_error.tolist(),
             "coverage": sc.coverage.tolist(),
             "n_converged": sc.n_converged,
             "n_failed": sc.n_failed}
            for sc in result.scenarios
        ],
    }
    _write_atomic(args.out, _json_dumps(report))
    _write_manifest(args.out, "study", report["config"], config.seed,
                    {"study": t_study})
    print(f"wrote {args.out}")
    return 0


# --------------------------------------------------------------- benchmarks

def _fd_gradient(f, x, rel_step=1e-6):
    """Central finite differences, two evaluations per coordinate."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.empty_like(x)
    for t in range(x.size):
        h = rel_step * max(1.0, abs(x[t]))
        xp = x.copy()
        xm = x.copy()
        xp[t] += h
        xm[t] -= h
        grad[t] = (f(xp) - f(xm)) / (2.0 * h)
    return grad


def _bench_instance(q, k, n, seed):
    """A dataset and an evaluation point for the timing benchmarks."""
    root = np.random.SeedSequence(seed)
    rng = np.random.default_rng(root.spawn(1)[0])
    sigma = random_sparse_correlation(q, 0.0, rng)
    base = np.linspace(-1.0, 1.0, k - 1) if k > 2 else np.zeros(1)
    cuts = np.tile(base, (q, 1)) + rng.uniform(-0.1, 0.1, size=(q, 1))
    thresholds = ThresholdSet(cuts)
    data = sample_dataset(sigma, thresholds, n,
                          np.random.default_rng(root.spawn(1)[0]))
    dims = ModelDims(q=q, k=k, n=n)
    counts = compute_counts(data, dims)
    theta = pack_theta(sigma, thresholds)
    return counts, theta


def cmd_bench_grad(args) -> int:
    qs = [int(tok) for tok in args.q_list.split(",") if tok.strip()]
    if not qs or any(q < 2 for q in qs):
        raise CliError(f"invalid --q-list {args.q_list!r}")
    lines = ["q,n_params,t_analytic_median_s,t_numeric_median_s,"
             "speedup,max_rel_discrepancy"]
    print(f"backend: {gauss.backend_name()}", file=sys.stderr)
    for q in qs:
        counts, theta = _bench_instance(q, args.k, args.n, args.seed)

        def f(th):
            return pairwise_loglik(th, counts)

        t_ana = []
        for _ in range(args.reps):
            t0 = time.perf_counter()
            analytic = pairwise_score(theta, counts)
            t_ana.append(time.perf_counter() - t0)
        t_num = []
        for _ in range(args.reps):
            t0 = time.perf_counter()
            numeric = _fd_gradient(f, theta)
            t_num.append(time.perf_counter() - t0)
        scale = np.maximum(np.abs(numeric), np.abs(analytic))
        scale[scale < 1.0] = 1.0
        disc = float(np.max(np.abs(analytic - numeric) / scale))
        med_a = float(np.median(t_ana))
        med_n = float(np.median(t_num))
        lines.append(f"{q},{theta.size},{med_a:.6g},{med_n:.6g},"
                     f"{med_n / med_a:.4g},{disc:.3g}")
        print(lines[-1], file=sys.stderr)
    text = "\n".join(lines) + "\n"
    if args.out:
        _write_atomic(args.out, text)
        _write_manifest(args.out, "bench-grad",
                        {"q_list": qs, "n": args.n, "k": args.k,
                         "reps": args.reps, "seed": args.seed},
                        args.seed, {})
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_bench_kernel(args) -> int:
    backends = gauss.available_backends()
    counts, theta = _bench_instance(args.q, args.k, args.n, args.seed)
    dims = counts.dims
    lines = ["backend,op,median_seconds"]
    active = gauss.backend_name()
    try:
        for name in sorted(backends):
            gauss.set_backend(name)
            corr, thr = unpack_theta(theta, dims)
            grids = [thr.full_grid(j) for j in range(1, dims.q + 1)]
            for op, fn in [
                ("pair_tables", lambda: [gauss.pair_tables(grids[0], grids[1],
                                                           corr.rhos[0])
                                         for _ in range(50)]),
                ("loglik_and_score", lambda: loglik_and_score(theta, counts)),
            ]:
                times = []
                for _ in range(args.reps):
                    t0 = time.perf_counter()
                    fn()
                    times.append(time.perf_counter() - t0)
                lines.append(f"{name},{op},{float(np.median(times)):.6g}")
                print(lines[-1], file=sys.stderr)
    finally:
        gauss.set_backend(active)
    if len(backends) == 1:
        print("note: only the python backend is installed; build the "
              "extension for a comparison", file=sys.stderr)
    text = "\n".join(lines) + "\n"
    if args.out:
        _write_atomic(args.out, text)
        _write_manifest(args.out, "bench-kernel",
                        {"q": args.q, "k": args.k, "n": args.n,
                         "reps": args.reps, "seed": args.seed},
                        args.seed, {})
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


# -------------------------------------------------------------------- rerun

def cmd_rerun(args) -> int:
    try:
        with open(args.manifest) as fh:
            manifest = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read manifest {args.manifest}: {exc}") from exc
    command = manifest.get("command")
    cfg = manifest.get("config", {})
    if command == "simulate":
        argv = ["simulate", "--q", str(cfg["q"]), "--k", str(cfg["k"]),
                "--n", str(cfg["n"]), "--zero-frac", str(cfg["zero_frac"]),
                "--seed", str(cfg["seed"]),
                "--thresholds", ";".join(",".join(str(c) for c in cuts)
                                         for cuts in cfg["thresholds"]),
                "--out-prefix", args.out_prefix or "rerun"]
    elif command == "fit":
        argv = ["fit", "--data", cfg["data"], "--k", str(cfg["k"]),
                "--level", str(cfg["level"]),
                "--max-iter", str(cfg["max_iter"]),
                "--out", args.out_prefix or cfg["out"]]
    elif command == "study":
        raise CliError("rerun of studies requires the original config file; "
                       "run 'pairprobit study' with it directly")
    else:
        raise CliError(f"manifest command {command!r} not rerunnable")
    return main(argv)


# --------------------------------------------------------------------- main

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pairprobit",
        description="Pairwise likelihood inference for multivariate "
                    "ordered probit models")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw a dataset from the model")
    p.add_argument("--q", type=int, required=True, help="number of margins")
    p.add_argument("--k", type=int, required=True, help="categories per margin")
    p.add_argument("--n", type=int, required=True, help="number of rows")
    p.add_argument("--zero-frac", type=float, default=0.3,
                   help="target fraction of exactly-zero correlations")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--thresholds", default=None,
                   help="menu like '0,0.5,1;-1,0,1' (random per margin)")
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit a model to a CSV dataset")
    p.add_argument("--data", required=True, help="headerless CSV of categories")
    p.add_argument("--k", type=int, default=None,
                   help="categories per margin (default: max in data)")
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--out", default=None, help="report path (default stdout)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("study", help="replicated simulation study")
    p.add_argument("--config", required=True, help="JSON study config")
    p.add_argument("--out", required=True, help="JSON report path")
    p.add_argument("--serial", action="store_true",
                   help="disable parallel replicates")
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("bench-grad",
                       help="analytic score vs finite-difference gradient")
    p.add_argument("--q-list", default="3,4,5,6,7,8,9,10,11,12")
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bench_grad)

    p = sub.add_parser("bench-kernel",
                       help="compiled kernels vs the NumPy fallback")
    p.add_argument("--q", type=int, default=5)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--reps", type=int, default=7)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bench_kernel)

    p = sub.add_parser("rerun", help="re-execute a command from a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out-prefix", default=None,
                   help="override output path/prefix")
    p.set_defaults(func=cmd_rerun)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
