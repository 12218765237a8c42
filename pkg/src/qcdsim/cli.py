"""qcdsim command line: subcommand dispatch and structured reports.

Every report embeds the resolved run configuration (flag name -> value) so
it can be replayed byte-for-byte; execution-only knobs (--threads,
--output) are excluded because they must not change the bytes produced.
Numeric CSV fields carry 17 significant digits and JSON floats use the
shortest exact representation, so parsing a report recovers the doubles
bit-for-bit.  Flat flags with a ``family:params`` mini-syntax cover the
common cases (``const:0.5``, ``linear:0.02,0.01``, ``indicator:0.5``); an
optional JSON config file supplies defaults but never overrides a flag
given on the command line.  Exit codes: 0 success, 2 validation failure,
1 runtime error.
"""

import argparse
import io
import json
import os
import sys

import numpy as np

from . import clark_ocone, hedging
from .chaos import ChaosCoefficients, norm_identity, truncated_chaos_ensemble
from .detfuncs import DeterministicFn
from .grid_paths import dump_paths_csv, make_uniform_grid, simulate_brownian
from .heat_kernel import (
    derivative_chain_residual,
    heat_equation_residual,
    normal_cdf,
)
from .payoffs import PayoffSpec
from .quadratic_covariation import QcdEstimatorConfig, default_config, qcd_profile

_G = ".17g"

_COMMON_DEFAULTS = {
    "seed": 0,
    "paths": 1000,
    "steps": 1024,
    "horizon": 1.0,
    "start": 0.0,
}

_SUB_DEFAULTS = {
    "paths": {},
    "verify-qcd": {"window_k": 0},
    "clark-ocone": {"payoff": "indicator:0.5", "eps": 0.0, "lam": ""},
    "chaos": {"strike": 0.0, "truncate": 15, "paths": 0},
    "hedge": {
        "b": "const:0.05",
        "a": "const:0.2",
        "r": "const:0.01",
        "strike": 0.5,
        "p0": 1.0,
        "freqs": "64,256,1024",
    },
    "heat-check": {},
    "girsanov": {"lam": "const:0.5", "strike": 0.0},
}


def build_parser():
    parser = argparse.ArgumentParser(prog="qcdsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--paths", type=int, default=None, help="number of Monte Carlo paths M")
        p.add_argument("--steps", type=int, default=None, help="grid steps N")
        p.add_argument("--horizon", type=float, default=None, help="time horizon T")
        p.add_argument("--start", type=float, default=None, help="starting point x")
        p.add_argument("--format", choices=("csv", "json"), default=None)
        p.add_argument("--output", default=None, help="output path (default stdout)")
        p.add_argument("--threads", type=int, default=None, help="worker thread cap")
        p.add_argument("--config", default=None, help="JSON file of flag defaults")

    p = sub.add_parser("paths", help="dump simulated Brownian paths as CSV")
    add_common(p)

    p = sub.add_parser("verify-qcd", help="strong-derivative profile of W against itself")
    add_common(p)
    p.add_argument("--window-k", dest="window_k", type=int, default=None)

    p = sub.add_parser("clark-ocone", help="pathwise representation reconstruction report")
    add_common(p)
    p.add_argument("--payoff", default=None, help="indicator:K | poly:c0,c1,... | sin | cos")
    p.add_argument("--eps", type=float, default=None, help="near-expiry cutoff (0 = default)")
    p.add_argument("--lambda", dest="lam", default=None, help="measure-change integrand")
    p.add_argument("--per-path", dest="per_path", default=None, help="per-path CSV output")

    p = sub.add_parser("chaos", help="indicator chaos coefficients and norm identity")
    add_common(p)
    p.add_argument("--strike", type=float, default=None)
    p.add_argument("--truncate", type=int, default=None)

    p = sub.add_parser("hedge", help="digital replication error by rebalance frequency")
    add_common(p)
    p.add_argument("--b", default=None, help="drift, const:c or linear:a,b")
    p.add_argument("--a", default=None, help="volatility")
    p.add_argument("--r", default=None, help="rate")
    p.add_argument("--strike", type=float, default=None)
    p.add_argument("--p0", type=float, default=None)
    p.add_argument("--freqs", default=None, help="comma list of rebalance frequencies")

    p = sub.add_parser("heat-check", help="kernel identity residuals on a lattice")
    add_common(p)

    p = sub.add_parser("girsanov", help="exponential martingale and reweighting check")
    add_common(p)
    p.add_argument("--lambda", dest="lam", default=None)
    p.add_argument("--strike", type=float, default=None)

    return parser


def _resolve(args):
    """Merge CLI values, config-file values, and defaults (in that order)."""
    file_cfg = {}
    if args.config:
        with open(args.config) as fh:
            file_cfg = json.load(fh)
    defaults = dict(_COMMON_DEFAULTS)
    defaults.update(_SUB_DEFAULTS[args.command])
    resolved = {}
    for key, fallback in defaults.items():
        cli_val = getattr(args, key, None)
        if cli_val is not None:
            resolved[key] = cli_val
        elif key in file_cfg:
            resolved[key] = type(fallback)(file_cfg[key]) if fallback is not None else file_cfg[key]
        else:
            resolved[key] = fallback
    resolved["command"] = args.command
    return resolved


def _fmt(value):
    if isinstance(value, float):
        return format(value, _G)
    return str(value)


def _emit(args, resolved, rows, header, extra=None, default_format="csv"):
    """Serialize rows either as commented CSV or as a JSON document."""
    fmt = args.format or default_format
    resolved = dict(resolved)
    resolved["format"] = fmt
    buf = io.StringIO()
    if fmt == "csv":
        buf.write("# config: " + json.dumps(resolved, sort_keys=True) + "\n")
        buf.write(",".join(header) + "\n")
        for row in rows:
            buf.write(",".join(_fmt(row[h]) for h in header) + "\n")
        if extra:
            buf.write("# " + json.dumps(extra, sort_keys=True) + "\n")
    else:
        doc = {"config": resolved, "rows": rows}
        if extra:
            doc.update(extra)
        buf.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    _write_out(args, buf.getvalue())


def _write_out(args, text):
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _grid_and_threads(resolved, args):
    grid = make_uniform_grid(resolved["horizon"], resolved["steps"])
    threads = args.threads
    if threads is None:
        threads = int(os.environ.get("QCDSIM_THREADS", "1"))
    return grid, threads


def _cmd_paths(args, resolved):
    grid, threads = _grid_and_threads(resolved, args)
    ens = simulate_brownian(
        grid, resolved["paths"], resolved["seed"], resolved["start"], workers=threads
    )
    buf = io.StringIO()
    resolved = dict(resolved, format="csv")
    buf.write("# config: " + json.dumps(resolved, sort_keys=True) + "\n")
    dump_paths_csv(ens, buf)
    _write_out(args, buf.getvalue())


def _cmd_verify_qcd(args, resolved):
    grid, threads = _grid_and_threads(resolved, args)
    ens = simulate_brownian(grid, 1, resolved["seed"], resolved["start"], workers=threads)
    w = ens.path(0)
    k = resolved["window_k"] or default_config(grid).half_width
    resolved["window_k"] = k
    cfg = QcdEstimatorConfig(window=max(2, k) * grid.dt, half_width=k)
    profile, boundary = qcd_profile(w, w, cfg)
    rows = [
        {
            "t": float(t),
            "estimate": float(v),
            "target": 1.0,
            "abs_error": float(abs(v - 1.0)),
        }
        for t, v, flagged in zip(profile.times, profile.values, boundary)
        if not flagged
    ]
    _emit(args, resolved, rows, ["t", "estimate", "target", "abs_error"])


def _cmd_clark_ocone(args, resolved):
    grid, threads = _grid_and_threads(resolved, args)
    spec = PayoffSpec.parse(resolved["payoff"], resolved["horizon"], resolved["start"])
    resolved["payoff"] = spec.tag()
    eps = resolved["eps"] or clark_ocone.default_eps(spec.horizon)
    resolved["eps"] = eps
    lam = DeterministicFn.parse(resolved["lam"]) if resolved["lam"] else None
    if lam is not None:
        resolved["lam"] = lam.tag()
    ens = simulate_brownian(
        grid, resolved["paths"], resolved["seed"], resolved["start"], workers=threads
    )
    report = clark_ocone.verify_ensemble(
        spec, ens, eps=eps, lam=lam, keep_paths=bool(args.per_path)
    )
    doc = {
        "e_F": report.e_f,
        "e_F_closed_form": report.e_f_closed_form,
        "l2_error": report.l2_error,
        "max_error": report.max_error,
        "N": report.mesh,
        "M": report.n_paths,
        "eps": report.eps,
        "seed": report.seed,
    }
    if args.per_path:
        exact = spec.terminal(ens.terminal)
        with open(args.per_path, "w") as fh:
            fh.write("path_id,exact,reconstruction\n")
            for i, (e, r) in enumerate(zip(exact, report.reconstructions)):
                fh.write(f"{i},{format(e, _G)},{format(r, _G)}\n")
    _emit(args, resolved, [doc], list(doc), default_format="json")


def _cmd_chaos(args, resolved):
    coeffs = ChaosCoefficients.indicator(
        resolved["horizon"], resolved["start"], resolved["strike"], resolved["truncate"]
    )
    rows = []
    for n in range(coeffs.order + 1):
        partial, target = norm_identity(coeffs, n)
        rows.append(
            {
                "n": n,
                "g_n": float(coeffs.g[n]),
                "partial_norm": partial,
                "target_norm": target,
            }
        )
    extra = None
    if resolved["paths"]:
        grid, threads = _grid_and_threads(resolved, args)
        ens = simulate_brownian(
            grid, resolved["paths"], resolved["seed"], resolved["start"], workers=threads
        )
        recon = truncated_chaos_ensemble(coeffs, ens.values)
        exact = (ens.terminal >= resolved["strike"]).astype(float)
        err = exact - recon
        extra = {
            "reconstruction": {
                "l2_error": float(np.sqrt(np.mean(err ** 2))),
                "mean": float(np.mean(recon)),
                "paths": resolved["paths"],
                "steps": resolved["steps"],
            }
        }
    _emit(args, resolved, rows, ["n", "g_n", "partial_norm", "target_norm"], extra=extra)


def _cmd_hedge(args, resolved):
    grid, threads = _grid_and_threads(resolved, args)
    market = hedging.MarketSpec(
        drift=DeterministicFn.parse(resolved["b"]),
        volatility=DeterministicFn.parse(resolved["a"]),
        rate=DeterministicFn.parse(resolved["r"]),
        strike=resolved["strike"],
        horizon=resolved["horizon"],
        initial_price=resolved["p0"],
        start=resolved["start"],
    )
    resolved["b"] = market.drift.tag()
    resolved["a"] = market.volatility.tag()
    resolved["r"] = market.rate.tag()
    freqs = [int(f) for f in str(resolved["freqs"]).split(",") if f.strip()]
    resolved["freqs"] = ",".join(str(f) for f in freqs)
    ens = simulate_brownian(
        grid, resolved["paths"], resolved["seed"], resolved["start"], workers=threads
    )
    rows = hedging.hedge_report(market, ens, freqs)
    _emit(args, resolved, rows, ["frequency", "l2_error", "q95_error", "mean_error"])


def _cmd_heat_check(args, resolved):
    rows = []
    for n in range(0, 5):
        for t in (0.8, 1.0, 1.5):
            for x in (-1.0, 0.0, 0.7, 1.5):
                rows.append(
                    {
                        "n": n,
                        "t": t,
                        "x": x,
                        "heat_eq_residual": float(heat_equation_residual(n, t, x)),
                        "hermite_residual": float(derivative_chain_residual(n, t, x)),
                    }
                )
    _emit(args, resolved, rows, ["n", "t", "x", "heat_eq_residual", "hermite_residual"])


def _cmd_girsanov(args, resolved):
    grid, threads = _grid_and_threads(resolved, args)
    lam = DeterministicFn.parse(resolved["lam"])
    resolved["lam"] = lam.tag()
    ens = simulate_brownian(
        grid, resolved["paths"], resolved["seed"], resolved["start"], workers=threads
    )
    dw = np.diff(ens.values, axis=1)
    lam_left = np.asarray(lam(grid.nodes[:-1]), dtype=float)
    z_terminal = np.exp(
        -np.sum(dw * lam_left, axis=1) - 0.5 * lam.square_antiderivative(grid.horizon)
    )
    payoff = (ens.terminal >= resolved["strike"]).astype(float)
    tilde_mean = float(np.mean(payoff * z_terminal))
    shift = lam.antiderivative(grid.horizon)
    closed = float(
        normal_cdf((resolved["start"] - shift - resolved["strike"]) / np.sqrt(grid.horizon))
    )
    doc = {
        "mean_Z_T": float(np.mean(z_terminal)),
        "se_Z_T": float(np.std(z_terminal, ddof=1) / np.sqrt(len(z_terminal))),
        "tilde_mean_F": tilde_mean,
        "closed_form_tilde_mean_F": closed,
        "M": resolved["paths"],
        "N": resolved["steps"],
        "seed": resolved["seed"],
    }
    _emit(args, resolved, [doc], list(doc), default_format="json")


_HANDLERS = {
    "paths": _cmd_paths,
    "verify-qcd": _cmd_verify_qcd,
    "clark-ocone": _cmd_clark_ocone,
    "chaos": _cmd_chaos,
    "hedge": _cmd_hedge,
    "heat-check": _cmd_heat_check,
    "girsanov": _cmd_girsanov,
}


def dispatch(argv) -> int:
    """Run one subcommand; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        resolved = _resolve(args)
        _HANDLERS[args.command](args, resolved)
    except ValueError as exc:
        print(f"qcdsim: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"qcdsim: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
