"""Command line entry point: ``qcredit {analyze,mc,cdf,resources}``.

Exit codes: 0 success, 1 internal failure, 2 configuration or schema error,
3 problem too large for the statevector / enumeration budget.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

from .distributions import Portfolio, build_latent_grid
from .errors import SizeError
from .model_circuits import MODES, build_A, layout_for
from .qae import QAE_MAX_QUBITS, run_qae, sample_estimate
from .resources import ResourceParams, estimate
from .risk import (
    ecr,
    exact_loss_distribution,
    expected_loss,
    mc_convergence,
    mc_simulate,
    var_bisection_qae,
    var_exact,
)

EXIT_OK, EXIT_INTERNAL, EXIT_CONFIG, EXIT_SIZE = 0, 1, 2, 3
SIG_DIGITS = 12


class ConfigError(ValueError):
    pass


def load_portfolio(path) -> Portfolio:
    """Parse ``{"assets": [{"lgd": int, "pd0": float, "rho": float}, ...]}``."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read portfolio file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"portfolio file is not valid JSON: {exc}") from None
    return parse_portfolio(doc)


def parse_portfolio(doc) -> Portfolio:
    if not isinstance(doc, dict) or not isinstance(doc.get("assets"), list) or not doc["assets"]:
        raise ConfigError('portfolio must be an object with a non-empty "assets" array')
    assets = []
    for i, rec in enumerate(doc["assets"]):
        where = f"assets[{i}]"
        if not isinstance(rec, dict):
            raise ConfigError(f"{where}: expected an object")
        extra = set(rec) - {"lgd", "pd0", "rho"}
        if extra:
            raise ConfigError(f"{where}: unknown field(s) {sorted(extra)}")
        lgd = rec.get("lgd")
        if isinstance(lgd, bool) or not isinstance(lgd, int) or lgd < 1:
            raise ConfigError(f"{where}.lgd: must be a positive integer, got {lgd!r}")
        pd0 = rec.get("pd0")
        if isinstance(pd0, bool) or not isinstance(pd0, (int, float)) or not 0 <= pd0 <= 1:
            raise ConfigError(f"{where}.pd0: must be a number in [0, 1], got {pd0!r}")
        rho = rec.get("rho", 0.0)
        if isinstance(rho, bool) or not isinstance(rho, (int, float)) or not 0 <= rho < 1:
            raise ConfigError(f"{where}.rho: must be a number in [0, 1), got {rho!r}")
        assets.append({"lgd": lgd, "pd0": float(pd0), "rho": float(rho)})
    return Portfolio.from_records(assets)


def _round(obj):
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return None
        return float(f"{obj:.{SIG_DIGITS}g}")
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if hasattr(obj, "item"):
        return _round(obj.item())
    return obj


def dump_report(report, path=None):
    text = json.dumps(_round(report), indent=2, sort_keys=True) + "\n"
    if path and path != "-":
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _grid(args):
    if args.model == "independent":
        return None
    if args.n_z < 1:
        raise ConfigError("--n-z must be at least 1 for the gci model")
    if not args.z_max > 0:
        raise ConfigError("--z-max must be positive")
    return build_latent_grid(args.n_z, args.z_max)


def _check_alpha(alpha):
    if not 0 < alpha <= 1:
        raise ConfigError(f"--alpha must lie in (0, 1], got {alpha}")


def _resolved_config(args, keys):
    return {k: getattr(args, k) for k in keys}


def _portfolio_records(portfolio):
    return [{"lgd": a.lgd, "pd0": a.pd0, "rho": a.rho} for a in portfolio.assets]


def _qubit_counts(portfolio, grid, m):
    n_state = layout_for(portfolio, grid).n_qubits
    return {"state": n_state, "ancilla": 1, "evaluation": m, "total": n_state + 1 + m}


def _check_qae_args(args):
    if args.m < 1:
        raise ConfigError(f"--m must be at least 1, got {args.m}")
    if args.shots is not None and args.shots < 1:
        raise ConfigError(f"--shots must be positive, got {args.shots}")


def _guard(portfolio, grid, m, max_qubits):
    counts = _qubit_counts(portfolio, grid, m)
    if counts["total"] > max_qubits:
        raise SizeError(f"amplitude estimation needs {counts['total']} qubits, "
                        f"budget is {max_qubits}")
    return counts


def cmd_analyze(args):
    _check_alpha(args.alpha)
    _check_qae_args(args)
    portfolio = load_portfolio(args.portfolio)
    grid = _grid(args)
    counts = _guard(portfolio, grid, args.m, args.max_qubits)
    exact = exact_loss_distribution(portfolio, grid)
    cdf = exact.cdf()
    exact_report = ecr(portfolio, grid, args.alpha, "exact")
    qae_report = var_bisection_qae(portfolio, grid, args.alpha, args.m, args.mode,
                                   args.shots, args.seed, args.max_qubits)
    table = []
    for x in range(1 << portfolio.n_S):
        res = run_qae(build_A(portfolio, grid, x, args.mode), args.m, args.max_qubits)
        table.append({"x": x, "exact_cdf": float(cdf[x]), "qae_estimate": res.estimate,
                      "bound": res.error_bound})
    report = {
        "command": "analyze",
        "config": _resolved_config(args, ["portfolio", "model", "n_z", "z_max", "alpha", "m",
                                          "mode", "shots", "seed", "max_qubits"]),
        "portfolio": _portfolio_records(portfolio),
        "n_S": portfolio.n_S,
        "qubits": counts,
        "expected_loss": expected_loss(portfolio, grid),
        "exact": exact_report.as_dict(),
        "qae": qae_report.as_dict(),
        "var_matches_exact": qae_report.var == exact_report.var,
        "loss_distribution": [float(p) for p in exact.probs],
        "cdf_table": table,
    }
    dump_report(report, args.output)
    if args.csv:
        _write_csv(args.csv, table)
    return EXIT_OK


def _write_csv(path, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "exact_cdf", "qae_estimate", "bound"])
    for r in rows:
        w.writerow([r["x"]] + [f"{r[k]:.{SIG_DIGITS}g}" for k in ("exact_cdf", "qae_estimate", "bound")])
    with open(path, "w") as fh:
        fh.write(buf.getvalue())


def cmd_cdf(args):
    _check_qae_args(args)
    portfolio = load_portfolio(args.portfolio)
    grid = _grid(args)
    if not 0 <= args.x < 1 << portfolio.n_S:
        raise ConfigError(f"--x must lie in [0, {(1 << portfolio.n_S) - 1}]")
    counts = _guard(portfolio, grid, args.m, args.max_qubits)
    res = run_qae(build_A(portfolio, grid, args.x, args.mode), args.m, args.max_qubits)
    est = res.estimate
    if args.shots:
        est = sample_estimate(res, args.shots, args.seed)
    exact = exact_loss_distribution(portfolio, grid).cdf()[args.x]
    report = {
        "command": "cdf",
        "config": _resolved_config(args, ["portfolio", "model", "n_z", "z_max", "x", "m",
                                          "mode", "shots", "seed", "max_qubits"]),
        "qubits": counts,
        "estimate": est,
        "exact_cdf": float(exact),
        "error_bound": res.error_bound,
        "outcome_probs": [float(p) for p in res.outcome_probs],
    }
    dump_report(report, args.output)
    return EXIT_OK


def cmd_mc(args):
    _check_alpha(args.alpha)
    for flag in ("samples", "partitions", "trials"):
        if getattr(args, flag) < 1:
            raise ConfigError(f"--{flag} must be positive")
    portfolio = load_portfolio(args.portfolio)
    grid = _grid(args)
    exact = exact_loss_distribution(portfolio, grid)
    dist, rep = mc_simulate(portfolio, grid, args.samples, args.seed, args.alpha, args.partitions)
    report = {
        "command": "mc",
        "config": _resolved_config(args, ["portfolio", "model", "n_z", "z_max", "alpha",
                                          "samples", "seed", "partitions", "sweep", "trials"]),
        "portfolio": _portfolio_records(portfolio),
        "mc": rep.as_dict(),
        "empirical_distribution": [float(p) for p in dist.probs],
        "exact_var": var_exact(exact, args.alpha),
    }
    if args.sweep:
        try:
            sizes = [int(s) for s in args.sweep.split(",") if s.strip()]
        except ValueError:
            raise ConfigError("--sweep must be a comma-separated list of integers") from None
        if not sizes or min(sizes) < 1:
            raise ConfigError("--sweep sizes must be positive")
        rows, slope, x = mc_convergence(portfolio, grid, sizes, args.trials, seed=args.seed)
        report["convergence"] = {"x": x, "rows": rows, "loglog_slope": slope}
    dump_report(report, args.output)
    return EXIT_OK


def cmd_resources(args):
    try:
        params = ResourceParams(K=args.K, n_Z=args.n_z, n_S=args.n_s, m=args.m,
                                epsilon=args.epsilon, gate_time_s=args.gate_time,
                                qft_free_halving=args.qft_free, w=args.w)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    rep = estimate(params, args.depth_a_override)
    if args.format == "text":
        lines = [
            f"depth_U {rep.depth_U}",
            f"depth_S {rep.depth_S}",
            f"depth_C {rep.depth_C}",
            f"depth_A {rep.depth_A}",
            f"oracle_calls {rep.a_calls}",
            f"total_depth {rep.total_depth}",
            f"total_depth_rounded {rep.total_depth_rounded}",
            f"runtime_s {rep.runtime_s:.{SIG_DIGITS}g}",
            f"runtime_hours {rep.runtime_s / 3600:.{SIG_DIGITS}g}",
            f"runtime_minutes {rep.runtime_s / 60:.{SIG_DIGITS}g}",
        ]
        text = "\n".join(lines) + "\n"
        if args.output and args.output != "-":
            with open(args.output, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    else:
        dump_report({"command": "resources", "report": rep.as_dict()}, args.output)
    return EXIT_OK


def _model_args(p):
    p.add_argument("portfolio", help="portfolio JSON file")
    p.add_argument("--model", choices=["independent", "gci"], default="gci")
    p.add_argument("--n-z", type=int, default=2, help="latent register qubits (gci)")
    p.add_argument("--z-max", type=float, default=3.0, help="latent truncation bound")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--output", "-o", default=None, help="report path (default stdout)")


def _qae_args(p):
    p.add_argument("--m", type=int, default=4, help="evaluation qubits")
    p.add_argument("--mode", choices=MODES, default="linear")
    p.add_argument("--shots", type=int, default=None)
    p.add_argument("--max-qubits", type=int, default=QAE_MAX_QUBITS)


def build_parser():
    parser = argparse.ArgumentParser(prog="qcredit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="expected loss, VaR and ECR by exact and QAE routes")
    _model_args(p)
    _qae_args(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--csv", default=None, help="CDF plot data side-file")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("cdf", help="single-point CDF estimate")
    _model_args(p)
    _qae_args(p)
    p.add_argument("--x", type=int, required=True, help="loss threshold")
    p.set_defaults(func=cmd_cdf)

    p = sub.add_parser("mc", help="Monte Carlo baseline")
    _model_args(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--partitions", type=int, default=1)
    p.add_argument("--sweep", default=None, help="comma-separated sample sizes")
    p.add_argument("--trials", type=int, default=200)
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("resources", help="fault-tolerant depth and runtime estimate")
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--n-z", type=int, default=10)
    p.add_argument("--n-s", type=int, default=30)
    p.add_argument("--m", type=int, default=10)
    p.add_argument("--epsilon", type=float, default=2.0 ** -10)
    p.add_argument("--gate-time", type=float, default=1e-4)
    p.add_argument("--w", type=int, default=None, help="latent register copies (default K)")
    p.add_argument("--qft-free", action="store_true")
    p.add_argument("--depth-a-override", type=int, default=None)
    p.add_argument("--format", choices=["json", "text"], default="json")
    p.add_argument("--output", "-o", default=None)
    p.set_defaults(func=cmd_resources)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"qcredit: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SizeError as exc:
        print(f"qcredit: too large: {exc}", file=sys.stderr)
        return EXIT_SIZE
    except Exception as exc:  # noqa: BLE001
        print(f"qcredit: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
