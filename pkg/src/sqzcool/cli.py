"""Command-line front end: ``sqzcool <command> [options]``.

Exit codes: 0 on success, 2 when some panel or point could not be
computed (flagged in the manifest), 1 on configuration errors.
"""
from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import __version__
from .core_model import LinearizedParams, build_injected_system, build_internal_system, stability
from .errors import ConfigError, SqzCoolError
from .figures import Panel, csv_text, reproduce_figure, write_bundle
from .frame import equivalence_certificate, map_internal_to_injected, squeezed_frame
from .lyapunov import numeric_spectrum
from .spectra import spectrum_cross, spectrum_injected, spectrum_internal, spectrum_pump
from .sweep import (
    Axis,
    Method,
    Model,
    SweepSpec,
    default_bounds,
    evaluate_point,
    optimize_nst,
    resolve,
    run_sweep,
    to_params,
)

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors, not "partial results"
    def error(self, message):
        raise ConfigError(message)


# ------------------------------------------------------------ config

def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from None
    extra = set(cfg) - {"system", "sweep", "optimize"}
    if extra:
        raise ConfigError(f"unknown config section(s): {', '.join(sorted(extra))}")
    return cfg


def _parse_sets(items):
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def _system(args, cfg):
    """(model, method, parameter map) with command-line values winning over the file."""
    system = dict(cfg.get("system", {}))
    model = args.model or system.pop("model", "internal")
    method = args.method or system.pop("method", "both")
    system.pop("model", None)
    system.pop("method", None)
    system.pop("omega_m_hz", None)  # labelling only
    try:
        model, method = Model(model), Method(method)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    values = {**system, **_parse_sets(args.set)}
    return model, method, values


def _range(text, what, with_count):
    parts = text.split(":")
    need = 3 if with_count else 2
    if len(parts) not in (need, need + 1):
        form = "lo:hi:count[:log]" if with_count else "lo:hi[:log]"
        raise ConfigError(f"{what} must look like {form}, got {text!r}")
    try:
        nums = [float(p) for p in parts[:2]]
        if with_count:
            nums.append(int(parts[2]))
    except ValueError:
        raise ConfigError(f"cannot parse {what} {text!r}") from None
    scale = parts[need] if len(parts) > need else "lin"
    return (*nums, scale)


def _axes(args, cfg):
    axes = []
    for item in args.axis or []:
        name, sep, rng = item.partition("=")
        if not sep:
            raise ConfigError(f"--axis expects name=lo:hi:count[:log], got {item!r}")
        lo, hi, count, scale = _range(rng, f"axis {name}", True)
        axes.append(Axis(name.strip(), lo, hi, count, scale))
    if not axes:
        for a in cfg.get("sweep", {}).get("axes", []):
            try:
                axes.append(Axis(a["name"], float(a["min"]), float(a["max"]), int(a["count"]),
                                 a.get("scale", "lin")))
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"bad [sweep] axis entry {a!r}: {exc}") from None
    return tuple(axes)


def _bounds(items, table):
    bounds = {}
    for item in items or []:
        name, sep, rng = item.partition("=")
        if not sep:
            raise ConfigError(f"expected name=lo:hi[:log], got {item!r}")
        lo, hi, scale = _range(rng, f"bounds of {name}", False)
        bounds[name.strip()] = (lo, hi, scale)
    if not bounds:
        for name, b in (table or {}).items():
            if not isinstance(b, (list, tuple)) or len(b) not in (2, 3):
                raise ConfigError(f"bounds of {name} must be [lo, hi] or [lo, hi, scale]")
            bounds[name] = tuple(b)
    return bounds


# ----------------------------------------------------------- output

def _emit(args, panels, manifest, prefix):
    """Write a bundle when --out is given, else print the single panel to stdout."""
    if args.out:
        manifest = write_bundle(args.out, panels, manifest, prefix=prefix)
        print(f"wrote {len(panels)} panel(s) and manifest.json to {args.out}")
    else:
        for p in panels:
            sys.stdout.write(csv_text(p))
    failed = any(p.partial for p in panels)
    return EXIT_PARTIAL if failed else EXIT_OK


def _record_panel(name, records):
    return Panel(name, [r.as_dict() for r in records])


# --------------------------------------------------------- commands

def cmd_nst(args, cfg):
    model, method, values = _system(args, cfg)
    t0 = time.perf_counter()
    rec = evaluate_point(model, values, method)
    manifest = {"command": "nst", "model": model.value, "method": method.value,
                "parameters": values, "runtime_s": time.perf_counter() - t0}
    if rec.message:
        print(f"note: {rec.message}", file=sys.stderr)
    return _emit(args, [_record_panel("nst", [rec])], manifest, "")


def cmd_spectrum(args, cfg):
    model, _, values = _system(args, cfg)
    r = resolve(model, values)
    p = to_params(model, r)
    omega = np.linspace(args.omega_min, args.omega_max, args.points)
    cols = {}
    if model is Model.INJECTED:
        cols["S_a"] = spectrum_injected(p, omega)
        sys_ = build_injected_system(p.__class__(**{**r, "G_a_s": 0.0}))
    else:
        cols["S_a"] = spectrum_internal(p, omega)
        sys_ = build_internal_system(p.replace(G_a=0.0))
        if model is Model.INTERNAL_FULL:
            cols["S_c"] = spectrum_pump(p, omega)
            cols["S_ac"] = spectrum_cross(p, omega)
    if args.numeric:
        cols["S_a_numeric"] = numeric_spectrum(sys_, ("a", "X"), omega).values
    rows = []
    for i, w in enumerate(omega):
        row = {"omega": float(w)}
        row.update({k: float(v[i]) for k, v in cols.items()})
        row["status"] = "ok"
        rows.append(row)
    manifest = {"command": "spectrum", "model": model.value, "parameters": values, "resolved": r}
    return _emit(args, [Panel("spectrum", rows)], manifest, "")


def cmd_sweep(args, cfg):
    model, method, values = _system(args, cfg)
    scfg = cfg.get("sweep", {})
    minimize = _bounds(args.minimize, scfg.get("minimize"))
    spec = SweepSpec(model=model, axes=_axes(args, cfg), fixed=values,
                     minimize_over=minimize or None, method=method,
                     starts=int(args.starts if args.starts is not None else scfg.get("starts", 8)),
                     seed=int(args.seed if args.seed is not None else scfg.get("seed", 0)))
    t0 = time.perf_counter()
    records = run_sweep(spec, threads=args.threads)
    manifest = {
        "command": "sweep", "model": model.value, "method": method.value, "parameters": values,
        "minimize_over": spec.minimize_over, "starts": spec.starts, "seed": spec.seed,
        "runtime_s": time.perf_counter() - t0,
    }
    manifest["axes"] = [{"name": a.name, "min": a.lo, "max": a.hi, "count": a.count, "scale": a.scale}
                        for a in spec.axes]
    return _emit(args, [_record_panel("sweep", records)], manifest, "")


def cmd_optimize(args, cfg):
    model, method, values = _system(args, cfg)
    ocfg = cfg.get("optimize", {})
    bounds = _bounds(args.bound, ocfg.get("bounds")) or default_bounds(model, values)
    starts = int(args.starts if args.starts is not None else ocfg.get("starts", 8))
    seed = int(args.seed if args.seed is not None else ocfg.get("seed", 0))
    t0 = time.perf_counter()
    rec = optimize_nst(model, values, bounds, starts=starts, seed=seed, method=method)
    manifest = {"command": "optimize", "model": model.value, "parameters": values,
                "bounds": bounds, "starts": starts, "seed": seed,
                "runtime_s": time.perf_counter() - t0}
    return _emit(args, [_record_panel("optimum", [rec])], manifest, "")


def cmd_map_frame(args, cfg):
    _, _, values = _system(args, cfg)
    p = LinearizedParams(**resolve(Model.INTERNAL, values))
    fr = squeezed_frame(p)
    q = map_internal_to_injected(p)
    row = {"delta_a": p.delta_a, "chi": p.chi, "phi": p.phi, "G_a": p.G_a,
           "s": fr.s, "phi_prime": fr.phi_prime, "frame_phase": fr.phi_s,
           "n_s": q.n_s, "m_s": q.m_s, "phi_s": q.phi_s, "delta_a_s": q.delta_a_s, "G_a_s": q.G_a_s}
    if args.check:
        rep = equivalence_certificate(p, tol=args.tol)
        row.update(n_internal=rep.n_internal, n_injected=rep.n_injected,
                   relative_difference=rep.relative_difference, passed=rep.passed)
    row["status"] = "ok"
    manifest = {"command": "map-frame", "parameters": values}
    code = _emit(args, [Panel("frame", [row])], manifest, "")
    if args.check and not row["passed"]:
        return EXIT_PARTIAL
    return code


def cmd_figure(args, cfg):
    overrides = {k: v for k, v in cfg.get("system", {}).items() if k not in ("model", "method", "omega_m_hz")}
    overrides.update(_parse_sets(args.set))
    out = args.out or f"fig{args.id}"
    res = reproduce_figure(args.id, overrides, out_dir=out, threads=args.threads)
    print(f"figure {args.id}: {len(res.panels)} panel(s) written to {out} "
          f"in {res.manifest['runtime_s']:.1f} s")
    if res.partial:
        print(f"partial panels: {', '.join(res.manifest['partial_panels'])}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_stability(args, cfg):
    model, _, values = _system(args, cfg)
    r = resolve(model, values)
    p = to_params(model, r)
    if model is Model.INJECTED:
        rep = stability(build_injected_system(p))
    else:
        rep = stability(build_internal_system(p, include_pump=model is Model.INTERNAL_FULL), p)
    row = {"stable": rep.stable, "max_real_eigenvalue": rep.max_real_eigenvalue,
           "opo_threshold_ratio": rep.opo_threshold_ratio, "status": "ok"}
    return _emit(args, [Panel("stability", [row])], {"command": "stability", "parameters": values}, "")


# ----------------------------------------------------------- parser

def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--model", choices=[m.value for m in Model])
    common.add_argument("--method", choices=[m.value for m in Method])
    common.add_argument("--config", help="TOML file with [system], [sweep] and [optimize] sections")
    common.add_argument("--out", help="output directory (CSV files plus manifest.json)")
    common.add_argument("--threads", type=int, default=1, help="worker threads for grid points")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="parameter override, e.g. --set kappa_a=10 or --set phi=opt")

    parser = _Parser(prog="sqzcool", description="Sideband cooling with squeezed light.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("nst", parents=[common], help="N_st and rates at one point")
    p.set_defaults(func=cmd_nst)

    p = sub.add_parser("spectrum", parents=[common], help="cavity force spectrum")
    p.add_argument("--omega-min", type=float, default=-3.0)
    p.add_argument("--omega-max", type=float, default=3.0)
    p.add_argument("--points", type=int, default=201)
    p.add_argument("--numeric", action="store_true", help="add the resolvent-based spectrum")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("sweep", parents=[common], help="grid sweep over one or two parameters")
    p.add_argument("--axis", action="append", metavar="NAME=LO:HI:COUNT[:log]")
    p.add_argument("--minimize", action="append", metavar="NAME=LO:HI[:log]",
                   help="minimise N_st over this parameter at every grid point")
    p.add_argument("--starts", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("optimize", parents=[common], help="minimise the exact N_st")
    p.add_argument("--bound", action="append", metavar="NAME=LO:HI[:log]")
    p.add_argument("--starts", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("map-frame", parents=[common], help="internal -> injected parameter map")
    p.add_argument("--check", action="store_true", help="compare exact N_st of both models")
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_map_frame)

    p = sub.add_parser("figure", parents=[common], help="regenerate the data of a figure")
    p.add_argument("id", type=int, choices=range(1, 7))
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("stability", parents=[common], help="drift-matrix stability report")
    p.set_defaults(func=cmd_stability)
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = _load_config(args.config)
        return args.func(args, cfg)
    except ConfigError as exc:
        print(f"sqzcool: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SqzCoolError, ValueError) as exc:
        print(f"sqzcool: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG if isinstance(exc, ValueError) else EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
