"""Command-line interface.

Exit codes: 0 success, 1 validation error, 2 I/O error, 3 self-test failure.
"""

import argparse
import dataclasses
import sys

import numpy as np

from . import experiments as ex
from .params import ParamError, SystemParams, snr_db_to_noise_power, validate
from .theory import build_joint_model, mi_oracle, mi_terms, skr_lower_bound

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_SELFTEST = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


def read_config(path):
    """Parse a flat ``key = value`` file; '#' starts a comment.

    Keys are SystemParams field names, plus ``snr_db``.
    """
    types = {f.name: f.type for f in dataclasses.fields(SystemParams)}
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            if key == "snr_db":
                out[key] = float(value)
            elif key in types:
                try:
                    out[key] = int(value) if types[key] in (int, "int") else float(value)
                except ValueError:
                    raise ConfigError(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
            else:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
    return out


def _params_from_args(args):
    values = read_config(args.config) if args.config else {}
    snr_db = values.pop("snr_db", None)
    for flag, name in (("n_elements", "n_elements"), ("t_s", "t_s"), ("q", "q_levels"),
                       ("f_blocks", "f_blocks"), ("t_k", "t_k")):
        v = getattr(args, flag, None)
        if v is not None:
            values[name] = v
    params = SystemParams(**values)
    if args.snr_db is not None:
        snr_db = args.snr_db
    if snr_db is not None:
        params = params.replace(noise_power=snr_db_to_noise_power(snr_db, params.power))
    if args.no_ris:
        params = params.replace(n_elements=0, t_s=params.t_k)
    return params


def _add_common(p):
    p.add_argument("--config", help="flat key=value file with SystemParams fields")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--keys", type=int, default=ex.DEFAULT_N_KEYS, help="keys per point")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--mode", choices=("reduced", "pilot"), default="reduced")
    p.add_argument("--out", help="CSV destination (default: stdout)")
    p.add_argument("--n-elements", dest="n_elements", type=int)
    p.add_argument("--t-s", dest="t_s", type=int)
    p.add_argument("--t-k", dest="t_k", type=int)
    p.add_argument("--f-blocks", dest="f_blocks", type=int)
    p.add_argument("--q", type=int)
    p.add_argument("--snr-db", dest="snr_db", type=float)
    p.add_argument("--no-ris", dest="no_ris", action="store_true",
                   help="direct channels only, one T_s = T_k window per block")


def build_parser():
    parser = argparse.ArgumentParser(prog="riskeygen", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", help="closed-form SKR lower bound (bits/symbol)")
    _add_common(p)

    for name, text in (("kmr", "simulated key mismatch rate"),
                       ("throughput", "simulated average key throughput")):
        p = sub.add_parser(name, help=text)
        _add_common(p)
        p.add_argument("--theory", action="store_true", help="attach the SKR lower bound")

    p = sub.add_parser("sweep", help="sweep one parameter and write CSV")
    _add_common(p)
    p.add_argument("--axis", required=True, choices=ex.SWEEP_AXES)
    p.add_argument("--values", required=True, help="comma-separated sweep values")
    p.add_argument("--theory", action="store_true")

    p = sub.add_parser("figure", help="reproduce a figure's curves as CSV")
    p.add_argument("name", choices=ex.FIGURES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--keys", type=int, default=ex.DEFAULT_N_KEYS)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--mode", choices=("reduced", "pilot"), default="reduced")
    p.add_argument("--out")
    p.add_argument("--n-elements", dest="n_elements", type=int,
                   help="RIS size for the SNR sweeps (fig4, fig6)")
    p.add_argument("--curves", help="comma-separated subset of curve labels")

    p = sub.add_parser("selftest", help="oracle-vs-theorem and identity checks")
    p.add_argument("--draws", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _write(writer, obj, out):
    if out:
        writer(obj, out)
    else:
        writer(obj, sys.stdout)


def _parse_values(axis, text):
    conv = float if axis == "snr_db" else int
    try:
        return [conv(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad --values for {axis}: {text!r}") from None


def cmd_bound(args):
    params = _params_from_args(args)
    derived = validate(params)
    print(f"{skr_lower_bound(params, derived):.12g}")


def cmd_single(args):
    params = _params_from_args(args)
    config = ex.ExperimentConfig(
        params, "n_elements", [params.n_elements], args.keys, args.seed, args.mode,
        include_theory=getattr(args, "theory", False),
    )
    result = ex.run_sweep(config, args.workers)
    if args.out:
        ex.emit_csv(result, args.out)
    row = result.rows[0]
    if args.command == "kmr":
        print(f"kmr={row.kmr_hat:.6g} ci95=+/-{row.ci_halfwidth:.3g} "
              f"per_estimate_match={row.per_estimate_match_hat:.6g} n_keys={row.n_keys}")
    else:
        print(f"throughput={row.throughput:.6g} bits/symbol match_prob={row.match_prob_hat:.6g} "
              f"mean_handshakes={row.mean_handshakes:.6g} n_keys={row.n_keys}")
    if row.theory_bound is not None:
        print(f"skr_lower_bound={row.theory_bound:.6g} bits/symbol")


def cmd_sweep(args):
    params = _params_from_args(args)
    config = ex.ExperimentConfig(
        params, args.axis, _parse_values(args.axis, args.values), args.keys, args.seed,
        args.mode, include_theory=args.theory, no_ris=args.no_ris,
    )
    result = ex.run_sweep(config, args.workers)
    _write(ex.emit_csv, result, args.out)


def cmd_figure(args):
    preset = ex.figure_preset(args.name, args.keys, args.seed, args.mode, args.n_elements)
    curves = args.curves.split(",") if args.curves else None
    results = ex.run_figure(preset, args.workers, curves)
    _write(ex.emit_figure_csv, results, args.out)


def run_selftest(draws=1000, seed=0, out=None):
    """Return True when every check passes; prints one line per check."""
    out = sys.stdout if out is None else out
    rng = np.random.default_rng(seed)
    ok = True

    def report(name, passed, detail):
        nonlocal ok
        ok &= bool(passed)
        print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}", file=out)

    worst, eve_max = 0.0, 0.0
    for params in random_params(rng, draws):
        derived = validate(params)
        model = build_joint_model(params, derived)
        worst = max(worst, abs(mi_oracle(model, params.t_s) - skr_lower_bound(params, derived)))
        eve_max = max(eve_max, *mi_terms(model)[1:])
    report("oracle-vs-theorem", worst <= 1e-9, f"max |diff| = {worst:.3g} over {draws} draws")
    report("eve-terms-zero", eve_max == 0.0, f"max Eve MI = {eve_max:.3g}")

    rho = rng.uniform(0, 1e3, 1000)
    s = 10 ** rng.uniform(-6, 2, 1000)
    lhs = (rho + s) ** 2 - rho**2
    rhs = s * (2 * rho + s)
    # cancellation on the left leaves absolute error ~ eps * (rho + s)^2
    err = np.max(np.abs(lhs - rhs) / (np.finfo(float).eps * (rho + s) ** 2))
    report("algebraic-identity", err <= 4, f"max error = {err:.3g} ulp of (rho+s)^2")

    config = ex.ExperimentConfig(ex.FIGURE_BASE, "n_elements", [1, 4], 400, seed)
    rows = ex.run_sweep(config).rows
    ident = all(
        r.throughput == r.match_prob_hat * 1 / (config.base.t_s / 2) and r.kmr_hat == 1 - r.match_prob_hat
        for r in rows
    )
    report("throughput-identity", ident, f"{len(rows)} rows")
    return ok


def random_params(rng, n):
    """Random parameter draws spanning the regimes the oracle must cover."""
    t_s_choices = [2, 4, 8, 10, 20, 40]
    for _ in range(n):
        betas = rng.uniform(0, 2, 6)
        betas[betas == 0] = 1.0
        yield SystemParams(
            n_elements=int(rng.integers(0, 257)),
            t_k=40,
            t_s=int(rng.choice(t_s_choices)),
            noise_power=float(10 ** rng.uniform(-4, 2)),
            beta_ab=betas[0], beta_ae=betas[1], beta_be=betas[2],
            beta_ar=betas[3], beta_rb=betas[4], beta_re=betas[5],
        )


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "bound":
            cmd_bound(args)
        elif args.command in ("kmr", "throughput"):
            cmd_single(args)
        elif args.command == "sweep":
            cmd_sweep(args)
        elif args.command == "figure":
            cmd_figure(args)
        elif args.command == "selftest":
            return EXIT_OK if run_selftest(args.draws, args.seed) else EXIT_SELFTEST
    except (ParamError, ex.SweepError, ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
