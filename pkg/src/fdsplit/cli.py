"""Command-line entry point.

Subcommands: ``single``, ``cdf``, ``sweep-si``, ``sweep-antennas``,
``selftest``.  Exit codes: 0 success, 1 selftest failure, 2 config error,
3 capacity error (exhaustive search beyond its antenna guard), 4 I/O error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__
from .channel import synthetic_realization
from .config import CapacityError, ConfigError, SystemConfig, load_config
from .decomposition import (
    build_linearized,
    build_quadratic_terms,
    f_ud_value,
    grad_f_ud_diag,
    identity_suite,
    objective_value,
)
from .harness import (
    ExperimentSpec,
    aggregate_cdf,
    aggregate_mean,
    build_spec,
    run_experiment,
)
from .mse_core import mmse_filters, mse_report, sum_mse_fixed_filters
from .plots import render_report
from .solver import solve_box_qp

# Per-profile defaults; CLI flags and config-file keys override them.
PROFILES: dict[str, dict[str, dict]] = {
    "desk": {
        "single": {"monte_carlo_iters": 1},
        "cdf": {"monte_carlo_iters": 100},
        "sweep_si": {"monte_carlo_iters": 100, "si_levels_db": (-50.0, -75.0, -100.0)},
        "sweep_antennas": {"monte_carlo_iters": 50, "antenna_counts": (8, 32, 64)},
    },
    "paper": {
        "single": {"monte_carlo_iters": 1},
        "cdf": {"monte_carlo_iters": 600},
        "sweep_si": {
            "monte_carlo_iters": 600,
            "si_levels_db": (-50.0, -60.0, -70.0, -80.0, -90.0, -100.0),
        },
        "sweep_antennas": {"monte_carlo_iters": 600, "antenna_counts": (8, 16, 32, 64)},
    },
}

_DEFAULT_METHODS = {
    "single": "rlx,exh,split",
    "cdf": "rlx,exh,split",
    "sweep_si": "rlx,exh,split",
    "sweep_antennas": "rlx,split",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fdsplit",
        description="UL/DL antenna splitting for a full-duplex base station",
    )
    parser.add_argument("--version", action="version", version=f"fdsplit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--seed", type=int, help="master seed (overrides config)")
        p.add_argument("--iters", type=int, help="Monte Carlo realizations")
        p.add_argument("--methods", help="comma list from rlx,exh,split")
        p.add_argument("--out", help="output CSV path")
        p.add_argument(
            "--profile", choices=("paper", "desk"), default="desk",
            help="default iteration counts / sweep grids (default: desk)",
        )
        p.add_argument(
            "--plot", action=argparse.BooleanOptionalAction, default=True,
            help="render the report figure next to the CSV",
        )
        p.add_argument(
            "--timing", action="store_true",
            help="record wall-clock times in the CSV (breaks byte-identical reruns)",
        )
        p.add_argument("--quiet", action="store_true", help="suppress progress output")

    for name, help_text in (
        ("single", "one scenario point at the configured M and SI level"),
        ("cdf", "sum-SE distribution at the configured M and SI level"),
        ("sweep-si", "mean sum SE across SI cancellation levels"),
        ("sweep-antennas", "mean sum SE across antenna counts"),
    ):
        p = sub.add_parser(name, help=help_text)
        add_common(p)
        p.set_defaults(func=_cmd_experiment, experiment=name.replace("-", "_"))

    p = sub.add_parser("selftest", help="quick numerical consistency checks")
    p.set_defaults(func=_cmd_selftest)
    return parser


def _load(args) -> tuple[SystemConfig, dict[str, str]]:
    if args.config:
        cfg, pairs = load_config(args.config)
    else:
        cfg, pairs = SystemConfig(), {}
    if args.seed is not None:
        import dataclasses

        if not 0 <= args.seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        cfg = dataclasses.replace(cfg, seed=args.seed)
    return cfg, pairs


def _cmd_experiment(args) -> int:
    cfg, pairs = _load(args)
    experiment = args.experiment
    defaults = {
        "methods": _DEFAULT_METHODS[experiment],
        "si_levels_db": PROFILES[args.profile]["sweep_si"]["si_levels_db"],
        "antenna_counts": PROFILES[args.profile]["sweep_antennas"]["antenna_counts"],
        "output_path": f"{experiment}.csv",
        **PROFILES[args.profile][experiment],
    }
    defaults["methods"] = tuple(
        m.strip().upper() for m in defaults["methods"].split(",")
    )
    spec: ExperimentSpec = build_spec(
        experiment,
        cfg,
        pairs,
        methods=args.methods,
        iters=args.iters,
        output_path=args.out,
        seed=args.seed,
        defaults=defaults,
    )

    progress = None
    if not args.quiet:
        def progress(point, npoints, realization, iters):
            done = realization + 1
            if done == iters or done % 25 == 0:
                print(f"  point {point + 1}/{npoints}: {done}/{iters} realizations",
                      file=sys.stderr)

    records = run_experiment(spec, cfg, timing=args.timing, progress=progress)
    print(f"wrote {len(records)} records to {spec.output_path}")
    _print_summary(records, spec)
    if args.plot:
        figure = render_report(records, experiment, spec.output_path)
        if figure:
            print(f"wrote figure to {figure}")
    return 0


def _print_summary(records, spec: ExperimentSpec) -> None:
    if not records:
        return
    if spec.experiment in ("single", "cdf"):
        for method in spec.methods:
            try:
                points = aggregate_cdf(records, method)
            except ValueError:
                continue
            values = [p[0] for p in points]
            median = float(np.median(values))
            print(f"  {method:<5} mean SE {np.mean(values):8.3f}  median SE {median:8.3f}"
                  "  [bits/s/Hz]")
    else:
        key = "si_db" if spec.experiment == "sweep_si" else "m"
        means = aggregate_mean(records, (key, "method"))
        for (point, method), value in sorted(means.items()):
            print(f"  {key}={point:g} {method:<5} mean SE {value:8.3f} [bits/s/Hz]")


def _check(name: str, passed: bool, detail: str = "") -> bool:
    status = "PASS" if passed else "FAIL"
    suffix = f"  ({detail})" if detail else ""
    print(f"{status}  {name}{suffix}")
    return passed


def _cmd_selftest(args) -> int:
    ok = True
    rng = np.random.default_rng(7)

    results = identity_suite(rng)
    for name, (passed, err) in results.items():
        ok &= _check(f"identity {name}", passed, f"max rel err {err:.2e}")

    # Linearization gradient against central differences.
    ch = synthetic_realization(rng, m=6, num_ul=2, num_dl=2)
    x = 0.2 + 0.6 * rng.random(6)
    filters = mmse_filters(ch, x)
    terms = build_quadratic_terms(ch, filters)
    diag = grad_f_ud_diag(x, terms, ch)
    h = 1e-6
    worst = 0.0
    for _ in range(5):
        d = rng.standard_normal(6)
        fd = (f_ud_value(x + h * d, terms, ch) - f_ud_value(x - h * d, terms, ch)) / (2 * h)
        worst = max(worst, abs(fd - diag @ d) / max(abs(fd), 1e-30))
    ok &= _check("coupling gradient vs finite differences", worst < 1e-6,
                 f"max rel err {worst:.2e}")

    # Decomposition matches sum-MSE differences for fixed filters.
    x2 = rng.random(6)
    lhs = objective_value(x, terms, ch) - objective_value(x2, terms, ch)
    rhs = sum_mse_fixed_filters(ch, x, filters) - sum_mse_fixed_filters(ch, x2, filters)
    err = abs(lhs - rhs) / max(abs(rhs), 1e-30)
    ok &= _check("quadratic rewrite vs direct sum MSE", err < 1e-8, f"rel err {err:.2e}")

    # Proximal box QP: fixed point of zero data, KKT residual on random data.
    lin = build_linearized(x, terms, ch)
    sol = solve_box_qp(lin, x, alpha=1.0)
    g = 2.0 * np.real(lin.lambda_total) @ sol - 2.0 * lin.b_vec + (sol - x)
    res = float(np.max(np.abs(sol - np.clip(sol - g, 0.0, 1.0))))
    ok &= _check("box QP KKT residual", res < 1e-6, f"residual {res:.2e}")

    # Scalar Wiener filter closed form.
    scalar = synthetic_realization(rng, m=1, num_ul=1, num_dl=0,
                                   kappa=0.0, beta=0.0, si_power=1e-12)
    f = mmse_filters(scalar, np.array([1.0]))
    q = scalar.q_ul[0]
    h0 = scalar.h_ul[0, 0]
    expected = scalar.noise_var_bs / (q * abs(h0) ** 2 + scalar.noise_var_bs)
    got = mse_report(scalar, np.array([1.0]), f).mse_ul[0]
    ok &= _check("scalar Wiener MSE", abs(got - expected) < 1e-12,
                 f"|diff| {abs(got - expected):.2e}")

    print("selftest:", "all checks passed" if ok else "FAILURES present")
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
