"""Command-line front end.

Subcommands: sweep-snr, sweep-err, convergence, complexity, validate.
Options may also come from a YAML config file (--config); explicit flags
override config values, which override defaults.  Exit codes: 0 success,
1 configuration error, 2 numerical failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import sys

import yaml

from rspower.errors import (
    BudgetExceededError,
    ConfigurationError,
    DegenerateGeometryError,
    DivergenceError,
    DomainError,
    SingularChannelError,
)
from rspower.harness import (
    ExperimentSpec,
    SCHEME_LABELS,
    convergence_scenario,
    default_scenario,
    run_complexity_table,
    run_convergence,
    run_error_sweep,
    run_snr_sweep,
)
from rspower.model import SystemConfig
from rspower.precoders import PRECODER_KINDS
from rspower import validation

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3


def _add_common(parser):
    parser.add_argument("--config", help="YAML file mirroring the experiment spec fields")
    parser.add_argument("--seed", type=int, help="master seed (default 1)")
    parser.add_argument("--out", help="output CSV path (default: print to stdout)")
    parser.add_argument("--channels", type=int, help="outer channel draws (default 200)")
    parser.add_argument("--errors", type=int, help="inner estimation-error draws (default 50)")
    parser.add_argument("--precoder", choices=PRECODER_KINDS, help="private precoder kind")
    parser.add_argument("--scheme", action="append", dest="schemes", metavar="LABEL",
                        help=f"allocation scheme, repeatable; one of {', '.join(SCHEME_LABELS)}")
    parser.add_argument("--snr-db", type=float, action="append", dest="snr_db",
                        help="SNR grid point in dB, repeatable")
    parser.add_argument("--err-var", type=float, action="append", dest="err_var",
                        help="estimation-error variance grid point, repeatable")
    parser.add_argument("--mu", help="step size: 'auto' or a number (default auto)")
    parser.add_argument("--iters", type=int, help="allocator iterations (default 30)")
    parser.add_argument("--delta", type=float, help="common share for the rs-upa scheme")
    parser.add_argument("--es-step", type=float, dest="es_step",
                        help="grid step of the exhaustive common-share search")
    parser.add_argument("--jobs", type=int, help="worker processes (default 1)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rspower",
        description="Rate-splitting downlink power-allocation experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in (
        ("sweep-snr", "ergodic sum rate over an SNR grid"),
        ("sweep-err", "ergodic sum rate over an error-variance grid"),
        ("convergence", "per-iteration objective and sum-rate traces"),
        ("complexity", "analytic FLOP table with measured iteration costs"),
        ("validate", "run the oracle and gradient self-checks"),
    ):
        p = sub.add_parser(name, help=doc)
        _add_common(p)
        if name == "complexity":
            p.add_argument("--n", type=int, action="append", dest="n_grid",
                           help="system size grid point, repeatable (default 4 8 16)")
            p.add_argument("--no-measure", action="store_true",
                           help="skip wall-clock measurement columns")
    return parser


def _load_config(path):
    if not path:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ConfigurationError("config file must hold a mapping")
    return data


def _pick(flag, config, key, default):
    if flag is not None:
        return flag
    if key in config:
        return config[key]
    return default


def _scenario_from(config: dict, seed: int, err_var: float, total_power: float) -> SystemConfig:
    sc = dict(config.get("scenario", {}))
    sc.setdefault("n_tx", 4)
    sc.setdefault("users", 2)
    sc.setdefault("rx_antennas_per_user", [2, 2])
    sc["rx_antennas_per_user"] = tuple(sc["rx_antennas_per_user"])
    if "streams_per_user" in sc:
        sc["streams_per_user"] = tuple(sc["streams_per_user"])
    sc.setdefault("noise_var", 1.0)
    sc["err_var"] = err_var
    sc["total_power"] = total_power
    sc["master_seed"] = seed
    return SystemConfig(**sc)


def _spec_from_args(args, convergence: bool = False) -> ExperimentSpec:
    config = _load_config(args.config)
    seed = int(_pick(args.seed, config, "seed", 1))
    mu = _pick(args.mu, config, "mu", "auto")
    if mu != "auto":
        mu = float(mu)
    snr_grid = tuple(_pick(args.snr_db, config, "snr_grid_db",
                           (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)))
    err_grid = tuple(_pick(args.err_var, config, "err_var_grid", (0.0, 0.05, 0.1, 0.2)))

    base = convergence_scenario(seed) if convergence else default_scenario(seed)
    # Fixed scenario point: the first --err-var governs SNR sweeps, the first
    # --snr-db governs error sweeps and convergence traces.
    err_var = float(args.err_var[0]) if args.err_var else \
        float(config.get("scenario", {}).get("err_var", base.err_var))
    if convergence:
        default_snr_point = 10.0
    elif args.command == "sweep-err":
        default_snr_point = 20.0
    else:
        default_snr_point = base.snr_db
    snr_point = float(args.snr_db[0]) if args.snr_db else \
        float(config.get("snr_point_db", default_snr_point))
    total_power = float(base.noise_var * 10.0 ** (snr_point / 10.0))
    if "scenario" in config:
        scenario = _scenario_from(config, seed, err_var, total_power)
    else:
        scenario = base.with_err_var(err_var).with_total_power(total_power)

    default_schemes = ("rs-apa", "rs-apar") if convergence else \
        ("conv-upa", "rs-apa", "rs-apar", "rs-es-upa")
    return ExperimentSpec(
        scenario=scenario,
        precoder_kind=_pick(args.precoder, config, "precoder", "zf"),
        schemes=tuple(_pick(args.schemes, config, "schemes", default_schemes)),
        snr_grid_db=snr_grid,
        err_var_grid=err_grid,
        n_channels=int(_pick(args.channels, config, "channels", 200)),
        n_errors=int(_pick(args.errors, config, "errors", 50)),
        output_path=_pick(args.out, config, "out", "") or "",
        mu=mu,
        iters=int(_pick(args.iters, config, "iters", 30)),
        delta=float(_pick(args.delta, config, "delta", 0.2)),
        es_grid_step=float(_pick(args.es_step, config, "es_grid_step", 0.05)),
        jobs=int(_pick(args.jobs, config, "jobs", 1)),
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            results = validation.run_all(verbose_print=print)
            return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_NUMERICAL
        if args.command == "complexity":
            n_grid = tuple(args.n_grid or (4, 8, 16))
            config = _load_config(args.config)
            out = _pick(args.out, config, "out", "") or ""
            text = run_complexity_table(n_grid, iterations=args.iters or 30,
                                        output_path=out, measure=not args.no_measure)
            if not out:
                sys.stdout.write(text)
            return EXIT_OK

        spec = _spec_from_args(args, convergence=args.command == "convergence")
        if args.command == "sweep-snr":
            text = run_snr_sweep(spec)
        elif args.command == "sweep-err":
            text = run_error_sweep(spec)
        else:
            mu_override = spec.mu if spec.mu != "auto" else 0.004
            text = run_convergence(spec, mu_override=mu_override)
        if not spec.output_path:
            sys.stdout.write(text)
        return EXIT_OK
    except (ConfigurationError, DomainError, yaml.YAMLError, argparse.ArgumentTypeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DivergenceError, SingularChannelError, DegenerateGeometryError,
            BudgetExceededError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    raise SystemExit(main())
