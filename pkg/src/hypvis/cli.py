"""Command-line interface: ``hypvis <command> [options]`` or ``python -m hypvis``.

Exit codes: 0 success, 1 tolerance failure, 2 usage error, 3 numerical
non-convergence, 130 interrupted (partial table written).
"""
import argparse
import csv
import io
import json
import math
import os
import re
import sys
import time

from . import __version__
from .errors import ConvergenceError, DomainError, UnsupportedDimensionError
from .measures import ModelParams, hitting_measure_closed, hitting_measure_quadrature
from .render import RenderOptions, render_disc_svg
from .sampler import (ProcessSample, SimConfig, radii_asymptotics_diagnostic, sample_process,
                      trial_seed)
from .visibility import (Z99, estimate_covering_probability, estimate_mean_volume,
                         shepp_diagnostic)

EXIT_OK, EXIT_TOLERANCE, EXIT_USAGE, EXIT_NONCONVERGENCE, EXIT_INTERRUPTED = 0, 1, 2, 3, 130
TABLE_COLUMNS = ["gamma", "lambda", "d", "S", "trials", "value", "std_error", "censored_fraction"]

DEFAULTS = {
    "verify-crofton": {"d_list": "2,3,4", "lambda_list": "0,0.25,0.5,0.75,1", "h_list": "0.1,1,5",
                       "gamma": "pi", "tol": 1e-8},
    "simulate": {"d": 2, "lam": 0.5, "gamma": "2", "S": 12.0, "n_max": 10 ** 6},
    "estimate-volume": {"d": 2, "lam": 0.0, "gamma": "3pi", "S": 15.0, "trials": 2000, "rays": 360},
    "phase-scan": {"d": 2, "lam": 0.5, "gammas": "2,pi,7", "S": 12.0, "trials": 500},
    "shepp": {"lam": 0.0, "gamma": "pi", "n": 1000, "S": 30.0},
    "radii": {"d": 2, "lam": 1.0, "gamma": "pi", "n": 1000, "runs": 200, "S": 30.0},
    "render": {"d": 2, "lam": 0.5, "gamma": "2", "S": 12.0, "n_max": 10 ** 6, "canvas": 1000,
               "rays": 720, "stroke": 1.0},
}


class UsageError(Exception):
    pass


_PI_RE = re.compile(r"^\s*([-+0-9.eE]*)\s*\*?\s*pi\s*$")


def parse_real(text):
    """A float, also accepting multiples of pi such as 'pi', '3pi' or '0.5*pi'."""
    if isinstance(text, (int, float)):
        return float(text)
    m = _PI_RE.match(str(text))
    try:
        if m:
            coef = m.group(1)
            return (float(coef) if coef not in ("", "+") else (-1.0 if coef == "-" else 1.0)) * math.pi
        return float(text)
    except ValueError:
        raise UsageError(f"not a number: {text!r}") from None


def parse_list(text, conv=parse_real):
    if isinstance(text, (list, tuple)):
        return [conv(x) for x in text]
    return [conv(x) for x in str(text).split(",") if x.strip()]


def resolve_seed(flag_seed, file_cfg):
    if flag_seed is not None:
        return flag_seed
    if "seed" in file_cfg:
        return int(file_cfg["seed"])
    env = os.environ.get("HYPVIS_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"HYPVIS_SEED is not an integer: {env!r}") from None
    return 0


def effective_config(command, args):
    """Defaults, then the --config file, then explicit flags."""
    file_cfg = {}
    if args.config:
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except OSError as exc:
            raise UsageError(f"cannot read config {args.config}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {args.config} is not valid JSON: {exc}") from None
        if "lambda" in file_cfg:
            file_cfg["lam"] = file_cfg.pop("lambda")
    cfg = dict(DEFAULTS[command])
    cfg.update({k: v for k, v in file_cfg.items() if k != "seed"})
    cfg.update({k: v for k, v in vars(args).items()
                if k in DEFAULTS[command] and v is not None})
    cfg["seed"] = resolve_seed(args.seed, file_cfg)
    for key in ("lam", "gamma", "S", "tol"):
        if key in cfg:
            cfg[key] = parse_real(cfg[key])
    for key in ("gammas", "lambda_list", "h_list"):
        if key in cfg:
            cfg[key] = parse_list(cfg[key])
    if "d_list" in cfg:
        cfg["d_list"] = parse_list(cfg["d_list"], int)
    return cfg


def _echo(command, cfg):
    out = {"command": command, "version": __version__}
    out.update({("lambda" if k == "lam" else k): v for k, v in cfg.items()})
    return out


def _open_out(path):
    if path is None or path == "-":
        return None
    try:
        return open(path, "w", newline="")
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror}") from None


def write_text(path, text):
    fh = _open_out(path)
    if fh is None:
        sys.stdout.write(text)
        return
    with fh:
        fh.write(text)


def format_table(rows, columns, echo, fmt, meta):
    if fmt == "json":
        return json.dumps({"config": echo, "meta": meta, "rows": rows}, indent=1) + "\n"
    buf = io.StringIO()
    buf.write(f"# config: {json.dumps(echo, sort_keys=True)}\n")
    buf.write(f"# meta: {json.dumps(meta, sort_keys=True)}\n")
    writer = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def emit_table(args, command, cfg, row_iter, columns):
    """Collect rows and write them; on interrupt the rows so far are still written."""
    rows, status = [], EXIT_OK
    start = time.perf_counter()
    try:
        for row in row_iter:
            rows.append(row)
    except KeyboardInterrupt:
        status = EXIT_INTERRUPTED
    meta = {"wall_clock_s": round(time.perf_counter() - start, 3), "complete": status == EXIT_OK}
    write_text(args.out, format_table(rows, columns, _echo(command, cfg), args.format, meta))
    return rows, status


def _sim_config(cfg, d=None):
    return SimConfig(int(cfg["d"] if d is None else d), parse_real(cfg["lam"]),
                     parse_real(cfg["gamma"]), parse_real(cfg["S"]),
                     int(cfg.get("n_max", 10 ** 6)), int(cfg["seed"]))


# commands

def cmd_verify_crofton(args):
    cfg = effective_config("verify-crofton", args)
    gamma = parse_real(cfg["gamma"])
    tol = float(cfg["tol"])
    failures = []

    def rows():
        for d in parse_list(cfg["d_list"], int):
            for lam in parse_list(cfg["lambda_list"]):
                for h in parse_list(cfg["h_list"]):
                    quad = hitting_measure_quadrature(ModelParams(d, lam, gamma), h)
                    closed = hitting_measure_closed(d, gamma, h)
                    err = abs(quad - closed) / abs(closed) if closed != 0.0 else abs(quad)
                    ok = err <= tol
                    if not ok:
                        failures.append((d, lam, h))
                    yield {"d": d, "lambda": lam, "h": h, "quadrature": quad, "closed": closed,
                           "rel_error": err, "pass": ok}

    _, status = emit_table(args, "verify-crofton", cfg, rows(),
                           ["d", "lambda", "h", "quadrature", "closed", "rel_error", "pass"])
    if status != EXIT_OK:
        return status
    for cell in failures:
        print(f"tolerance failure at d={cell[0]} lambda={cell[1]} h={cell[2]}", file=sys.stderr)
    return EXIT_TOLERANCE if failures else EXIT_OK


def cmd_simulate(args):
    cfg = effective_config("simulate", args)
    sample = sample_process(_sim_config(cfg))
    write_text(args.out, sample.to_json() + "\n")
    if args.render:
        write_text(args.render, render_disc_svg(sample))
    return EXIT_OK


def cmd_render(args):
    cfg = effective_config("render", args)
    if args.sample:
        try:
            with open(args.sample) as fh:
                sample = ProcessSample.from_json(fh.read())
        except OSError as exc:
            raise UsageError(f"cannot read sample {args.sample}: {exc.strerror}") from None
    else:
        sample = sample_process(_sim_config(cfg))
    opts = RenderOptions(int(cfg["canvas"]), int(cfg["rays"]), not args.no_region,
                         float(cfg["stroke"]))
    write_text(args.out, render_disc_svg(sample, None, opts))
    return EXIT_OK


def cmd_estimate_volume(args):
    cfg = effective_config("estimate-volume", args)
    config = _sim_config(cfg)
    trials = int(cfg["trials"])

    def rows():
        est = estimate_mean_volume(config, trials, int(cfg["rays"]), jobs=args.jobs)
        yield {"gamma": config.gamma, "lambda": config.lam, "d": config.d, "S": config.s_cutoff,
               "trials": trials, "value": est.estimate, "std_error": est.std_error,
               "censored_fraction": est.censored_fraction}

    return emit_table(args, "estimate-volume", cfg, rows(), TABLE_COLUMNS)[1]


def cmd_phase_scan(args):
    cfg = effective_config("phase-scan", args)
    trials = int(cfg["trials"])
    base = _sim_config(dict(cfg, gamma=1.0))

    def rows():
        for g in sorted(parse_list(cfg["gammas"])):
            config = SimConfig(base.d, base.lam, g, base.s_cutoff, base.n_max, base.seed)
            est = estimate_covering_probability(config, trials, jobs=args.jobs)
            # value: covered fraction; censored_fraction: trials still uncovered at the cutoff
            yield {"gamma": g, "lambda": base.lam, "d": base.d, "S": base.s_cutoff,
                   "trials": trials, "value": est.fraction_covered,
                   "std_error": est.ci_halfwidth / Z99,
                   "censored_fraction": 1.0 - est.fraction_covered}

    return emit_table(args, "phase-scan", cfg, rows(), TABLE_COLUMNS)[1]


def cmd_diagnostics(args):
    kind = args.kind
    cfg = effective_config(kind, args)
    if kind == "shepp":
        config = SimConfig(2, parse_real(cfg["lam"]), parse_real(cfg["gamma"]), parse_real(cfg["S"]),
                           seed=int(cfg["seed"]))
        rows = iter(shepp_diagnostic(config, int(cfg["n"])))
        columns = ["n", "r_n", "ell_n", "n_ell_n", "partial_sum"]
    else:
        n = int(cfg["n"])
        base = SimConfig(int(cfg["d"]), parse_real(cfg["lam"]), parse_real(cfg["gamma"]),
                         parse_real(cfg["S"]), n, int(cfg["seed"]))

        def samples():
            for i in range(int(cfg["runs"])):
                yield sample_process(base.with_seed(trial_seed(base.seed, i)))

        rows = iter(radii_asymptotics_diagnostic(samples()))
        columns = ["n", "mean", "std_error", "limit", "mean_gap", "first_order_gap"]
    return emit_table(args, f"diagnostics {kind}", cfg, rows, columns)[1]


def _common(p, table=True):
    p.add_argument("--config", help="JSON file with parameter values; flags override it")
    p.add_argument("--seed", type=int, help="64-bit seed (fallback: $HYPVIS_SEED, then 0)")
    p.add_argument("--out", help="output path (default: stdout)")
    if table:
        p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for independent trials")


def _model(p, d=True, n_max=True):
    if d:
        p.add_argument("--d", type=int)
    p.add_argument("--lambda", dest="lam")
    p.add_argument("--gamma")
    p.add_argument("--S", help="hyperbolic cutoff radius")
    if n_max:
        p.add_argument("--n-max", dest="n_max", type=int)


def build_parser():
    parser = argparse.ArgumentParser(prog="hypvis", description=(
        "Visibility in Poisson processes of lambda-geodesic hyperplanes in hyperbolic space."))
    parser.add_argument("--version", action="version", version=f"hypvis {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-crofton", help="hitting measure: quadrature against closed form")
    _common(p)
    p.add_argument("--d-list", dest="d_list")
    p.add_argument("--lambda-list", dest="lambda_list")
    p.add_argument("--h-list", dest="h_list")
    p.add_argument("--gamma")
    p.add_argument("--tol", type=float)
    p.set_defaults(func=cmd_verify_crofton)

    p = sub.add_parser("simulate", help="sample the truncated process as JSON")
    _common(p, table=False)
    _model(p)
    p.add_argument("--render", metavar="SVG", help="also write a disc picture (d = 2)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate-volume", help="Monte-Carlo mean volume of the visibility region")
    _common(p)
    _model(p)
    p.add_argument("--trials", type=int)
    p.add_argument("--rays", type=int)
    p.set_defaults(func=cmd_estimate_volume)

    p = sub.add_parser("phase-scan", help="covering fraction across intensities")
    _common(p)
    _model(p)
    p.add_argument("--gammas", help="comma-separated intensities, 'pi' multiples allowed")
    p.add_argument("--trials", type=int)
    p.set_defaults(func=cmd_phase_scan)

    p = sub.add_parser("diagnostics", help="asymptotic diagnostics")
    dsub = p.add_subparsers(dest="kind", required=True)
    q = dsub.add_parser("shepp", help="arc lengths and Shepp series partial sums (d = 2)")
    _common(q)
    _model(q, d=False, n_max=False)
    q.add_argument("--n", type=int, help="number of terms")
    q.set_defaults(func=cmd_diagnostics)
    q = dsub.add_parser("radii", help="scaled gaps n^(1/(d-1)) (1 - r_n)")
    _common(q)
    _model(q, n_max=False)
    q.add_argument("--n", type=int, help="largest index")
    q.add_argument("--runs", type=int)
    q.set_defaults(func=cmd_diagnostics)

    p = sub.add_parser("render", help="SVG picture of a sample (d = 2)")
    _common(p, table=False)
    _model(p)
    p.add_argument("--sample", help="sample JSON written by 'simulate'")
    p.add_argument("--canvas", type=int)
    p.add_argument("--rays", type=int)
    p.add_argument("--stroke", type=float)
    p.add_argument("--no-region", action="store_true")
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, DomainError, UnsupportedDimensionError) as exc:
        print(f"hypvis: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConvergenceError as exc:
        print(f"hypvis: no convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except KeyboardInterrupt:
        return EXIT_INTERRUPTED


if __name__ == "__main__":
    sys.exit(main())
