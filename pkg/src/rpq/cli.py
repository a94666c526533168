"""Command-line entry point: ``rpq <command> [flags]``.

Exit codes: 0 success (whatever the verdict), 2 usage or domain error,
3 numerical failure, 4 Euler-Maruyama stability rejection.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .exceptions import DomainError, QuadratureError, StabilityError
from .kernels import ModelParams
from .rp_d1 import (
    TOLERANCE_FACTOR,
    DeltaComb,
    gram_matrix,
    null_comb,
    scan_f,
    series_coeffs,
)

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_STABILITY = 0, 2, 3, 4


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("RPQ_THREADS", "1")))
    except ValueError:
        return 1


def _float_range(spec: str):
    """``start:stop:step`` inclusive of ``stop`` (up to rounding)."""
    try:
        start, stop, step = (float(x) for x in spec.split(":"))
    except ValueError:
        raise DomainError(f"expected start:stop:step, got {spec!r}")
    if step <= 0 or stop < start:
        raise DomainError("need step > 0 and stop >= start")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(n)]


def _grid(t_max: float, t_step: float):
    if t_max < 0 or t_step <= 0:
        raise DomainError("need t_max >= 0 and t_step > 0")
    return _float_range(f"0:{t_max}:{t_step}")


def parse_comb(spec: str, mass: float) -> DeltaComb:
    """``null:S:T`` or ``atoms:t1=w1,t2=w2,...``."""
    kind, _, rest = spec.partition(":")
    if kind == "null":
        s, t = (float(x) for x in rest.split(":"))
        return null_comb(mass, s, t)
    if kind == "atoms":
        atoms = []
        for item in rest.split(","):
            t, w = item.split("=")
            atoms.append((float(t), float(w)))
        return DeltaComb(tuple(atoms))
    raise DomainError(f"unknown comb spec {spec!r}")


def read_config(path: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment. Dashes in keys become underscores."""
    out = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DomainError(f"bad config line: {raw.rstrip()!r}")
            k, v = (x.strip() for x in line.split("=", 1))
            out[k.replace("-", "_")] = v
    return out


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(["%.17g" % x for x in row])


def _emit(report: dict, out: str | None) -> None:
    text = json.dumps(report, sort_keys=True, indent=2)
    if out:
        with open(out + ".json", "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _envelope(command: str, config: dict, tolerances: dict, result: dict) -> dict:
    return {
        "command": command,
        "config": config,
        "tool": {"name": "rpq", "version": __version__},
        "tolerances": tolerances,
        "result": result,
    }


def _params(args, dim=1) -> ModelParams:
    return ModelParams(args.lam, args.mass, dim)


def cmd_scan_f(args) -> int:
    params = _params(args)
    grid = _grid(args.t_max, args.t_step)
    rows, report = scan_f(params, grid, method=args.method, workers=_threads())
    if args.out:
        _write_csv(args.out + ".csv", ["t", "F"], [(t, f) for t, f, _ in rows])
    result = report.to_dict()
    result["max_error_estimate"] = max(r[2] for r in rows)
    _emit(_envelope("scan-f", vars_clean(args),
                    {"violation_factor": TOLERANCE_FACTOR}, result), args.out)
    return EXIT_OK


def cmd_coeffs(args) -> int:
    if not (args.lambda_eff > 0 and math.isfinite(args.lambda_eff)):
        raise DomainError("--lambda-eff must be > 0")
    sc = series_coeffs(args.lambda_eff)
    result = {
        "w0": sc.w0,
        "c_lambda": sc.c_lambda,
        "wpp0": sc.wpp0,
        "leading": sc.leading,
        "error_estimate": sc.error_estimate,
        "boundary_case": args.lambda_eff == 0.5,
        "below_threshold": args.lambda_eff < 0.5,
    }
    _emit(_envelope("coeffs", vars_clean(args), {}, result), args.out)
    return EXIT_OK


def cmd_gram(args) -> int:
    params = _params(args)
    ts = _float_range(args.null_family)
    if ts[0] <= 0:
        raise DomainError("null-family times must be > 0")
    family = [null_comb(params.mass, 0.0, t) for t in ts]
    M, report = gram_matrix(family, params, kernel=args.kernel, method=args.method)
    if args.out:
        _write_csv(args.out + ".csv", ["index", "eigenvalue"],
                   list(enumerate(report.gram_spectrum)))
    result = report.to_dict()
    result["matrix"] = M.tolist()
    result["family_times"] = ts
    _emit(_envelope("gram", vars_clean(args),
                    {"violation_factor": TOLERANCE_FACTOR}, result), args.out)
    return EXIT_OK


def cmd_ddim(args) -> int:
    from .rp_ddim import (
        DdimTestSpec,
        band_profile,
        fpp0_ddim,
        null_check_ddim,
        scan_f_ddim,
        support_condition,
    )

    if args.d < 2:
        raise DomainError("--d must be >= 2")
    params = _params(args, dim=args.d)
    try:
        lo, hi = (float(x) for x in args.band.split(","))
    except ValueError:
        raise DomainError("--band expects p_min,p_max")
    profile = band_profile(args.d - 1, lo, hi, args.taper)
    base = {"support_condition": support_condition(profile, params),
            "support_radius": 1.0 / math.sqrt(2.0 * params.lam)}
    if args.action == "fpp0":
        r = fpp0_ddim(profile, params)
        result = dict(base, value=r.value, error_estimate=r.error_estimate,
                      positive=r.value > TOLERANCE_FACTOR * r.error_estimate)
    elif args.action == "nullcheck":
        r = null_check_ddim(DdimTestSpec(profile, args.S, args.T, params))
        result = dict(base, value=r.value, error_estimate=r.error_estimate)
    else:
        grid = _grid(args.t_max, args.t_step)
        rows, report = scan_f_ddim(profile, params, grid)
        if args.out:
            _write_csv(args.out + ".csv", ["T", "F"], [(t, f) for t, f, _ in rows])
        result = dict(base, **report.to_dict())
        result["max_error_estimate"] = max(r[2] for r in rows)
    _emit(_envelope("ddim " + args.action, vars_clean(args),
                    {"violation_factor": TOLERANCE_FACTOR}, result), args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .spde_sim import (
        FieldSample,
        build_lattice,
        estimate_rp_form,
        evolve_em,
        probe_rp_violation,
        sample_exact_batch,
        write_samples,
    )

    lattice = build_lattice(args.dim, args.n, args.L, args.mass)
    params = ModelParams(args.lam, args.mass, args.dim)
    comb = parse_comb(args.comb, args.mass)
    if args.method == "exact":
        if args.adaptive:
            stats = probe_rp_violation(lattice, params, comb, args.seed,
                                       initial=min(args.samples, 100_000),
                                       max_samples=args.samples)
        else:
            stats = probe_rp_violation(lattice, params, comb, args.seed,
                                       initial=args.samples, max_samples=args.samples)
        if args.save_samples:
            vals = sample_exact_batch(lattice, params, 0, stats.count, args.seed)
            write_samples(args.save_samples, vals, lattice=lattice, params=params,
                          seed=args.seed)
    else:
        if args.dlambda is None:
            raise DomainError("--dlambda is required with --method em")
        steps = int(round(args.lam / args.dlambda))
        zero = FieldSample(lattice, np.zeros((args.samples,) + lattice.shape), 0.0, args.seed)
        out = evolve_em(lattice, zero, args.dlambda, steps, args.seed)
        stats = estimate_rp_form([out], comb, params, lattice=lattice)
        if args.save_samples:
            write_samples(args.save_samples, out.values, lattice=lattice, params=params,
                          seed=args.seed)
    est = stats.rp_estimate
    se = stats.rp_stderr if len(stats.block_counts) > 1 else None
    result = {
        "samples": stats.count,
        "estimate": est,
        "stderr": se,
        "exact_lattice": stats.exact_lattice,
        "exact_continuum": stats.exact_continuum,
        "z_vs_lattice": (est - stats.exact_lattice) / se if se else None,
        "negative_by_3_sigma": bool(est + 3 * se < 0) if se is not None else None,
        "lattice": lattice.describe(),
        "comb": comb.to_dict(),
        "notes": ["torus probe: numerical evidence only"],
    }
    _emit(_envelope("simulate", vars_clean(args), {"sigmas": 3.0}, result), args.out)
    return EXIT_OK


def vars_clean(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rpq", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"rpq {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, lam=True, mass=True):
        if lam:
            sp.add_argument("--lambda", dest="lam", type=float)
        if mass:
            sp.add_argument("--mass", type=float)
        sp.add_argument("--out", help="output prefix for .csv/.json (default: JSON to stdout)")
        sp.add_argument("--config", help="key=value file merged under the flags")

    sp = sub.add_parser("scan-f", help="scan F(t) in d=1")
    common(sp)
    sp.add_argument("--t-max", type=float)
    sp.add_argument("--t-step", type=float, default=0.01)
    sp.add_argument("--method", choices=["quadrature", "closed"], default="quadrature")
    sp.set_defaults(func=cmd_scan_f, required_flags=("lam", "mass", "t_max"))

    sp = sub.add_parser("coeffs", help="series coefficients at lambda*m^2")
    common(sp, lam=False, mass=False)
    sp.add_argument("--lambda-eff", type=float)
    sp.set_defaults(func=cmd_coeffs, required_flags=("lambda_eff",))

    sp = sub.add_parser("gram", help="Gram spectrum over a null-comb family")
    common(sp)
    sp.add_argument("--null-family", default="0.2:1.4:0.2")
    sp.add_argument("--kernel", choices=["dlambda", "equilibrium"], default="dlambda")
    sp.add_argument("--method", choices=["quadrature", "closed"], default="quadrature")
    sp.set_defaults(func=cmd_gram, required_flags=("lam", "mass"))

    sp = sub.add_parser("ddim", help="d > 1 construction")
    sp.add_argument("action", choices=["fpp0", "scan", "nullcheck"])
    common(sp)
    sp.add_argument("--d", type=int, default=2)
    sp.add_argument("--band", default="1,2")
    sp.add_argument("--taper", type=float, default=0.25)
    sp.add_argument("--t-max", type=float, default=0.05)
    sp.add_argument("--t-step", type=float, default=0.005)
    sp.add_argument("--S", type=float, default=0.0)
    sp.add_argument("--T", type=float, default=0.5)
    sp.set_defaults(func=cmd_ddim, required_flags=("lam", "mass"))

    sp = sub.add_parser("simulate", help="lattice Monte Carlo of the RP form")
    common(sp)
    sp.add_argument("--dim", type=int, default=1)
    sp.add_argument("--n", type=int, default=256)
    sp.add_argument("--L", type=float, default=64.0)
    sp.add_argument("--samples", type=int, default=100_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--comb", default="null:0:0.5")
    sp.add_argument("--method", choices=["exact", "em"], default="exact")
    sp.add_argument("--dlambda", type=float)
    sp.add_argument("--adaptive", action="store_true",
                    help="double the sample count from 1e5 until 3 sigma or --samples")
    sp.add_argument("--save-samples", help="write the sample stream to this file")
    sp.set_defaults(func=cmd_simulate, required_flags=("lam", "mass"))
    return p


def _apply_config(parser, args, argv):
    """Re-parse with config values as defaults so explicit flags win."""
    cfg = read_config(args.config)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest: a for a in sub._actions}
    defaults = {}
    for k, v in cfg.items():
        dest = {"lambda": "lam"}.get(k, k)
        if dest not in known:
            raise DomainError(f"unknown config key {k!r}")
        action = known[dest]
        if isinstance(action, argparse._StoreTrueAction):
            defaults[dest] = v.lower() in ("1", "true", "yes", "on")
        else:
            defaults[dest] = (action.type or str)(v)
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(argv)
    try:
        if args.config:
            args = _apply_config(parser, args, argv)
        missing = [f for f in args.required_flags if getattr(args, f, None) is None]
        if missing:
            names = ", ".join("--" + ("lambda" if m == "lam" else m.replace("_", "-"))
                              for m in missing)
            parser.error(f"missing required flag(s): {names}")
        del args.required_flags
        return args.func(args)
    except DomainError as exc:
        print(f"rpq: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StabilityError as exc:
        print(f"rpq: stability: {exc}", file=sys.stderr)
        return EXIT_STABILITY
    except (QuadratureError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"rpq: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
