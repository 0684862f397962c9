"""Data behind the six published figures, written as CSV panels plus a manifest."""
from __future__ import annotations

import hashlib
import json
import math
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .core_model import FullModelParams, LinearizedParams
from .errors import ConfigError, NoStablePoint, SqzCoolError
from .mean_field import invert_targets, linearize, solve_mean_field
from .optimal import equal_coupling_detunings
from .spectra import spectrum_internal
from .sweep import (
    KNOWN,
    R_MAX,
    Axis,
    Method,
    Model,
    SweepSpec,
    evaluate_point,
    optimize_nst,
    resolve,
    run_sweep,
)

__all__ = [
    "Panel",
    "FigureResult",
    "reproduce_figure",
    "write_bundle",
    "write_csv",
    "csv_text",
    "blob_sha1",
    "FAILED_STATUSES",
]

# statuses that mean "no answer", as opposed to a physical verdict
FAILED_STATUSES = ("not_converged", "invalid")

# phases of the cuts quoted alongside the fourth and fifth figures, in units of pi
QUOTED_CUTS = {4: {"internal": 0.62, "injected": 0.47}, 5: {"internal": 0.63, "injected": 0.45}}

FIGURE_OPTIONS = {
    "points": 101,        # samples along 1-D axes
    "phi_points": 24,     # phase samples of the 2-D maps
    "r_points": 20,       # squeezing-ratio samples of the 2-D maps
    "cut_points": 40,     # samples along the phase cuts
    "starts": 8,          # multi-start count of the inner minimiser
    "seed": 0,
}


@dataclass
class Panel:
    name: str
    rows: list
    columns: list = field(default_factory=list)

    def __post_init__(self):
        if not self.columns:
            cols = []
            for row in self.rows:
                cols.extend(k for k in row if k not in cols)
            if "status" in cols:
                cols.remove("status")
                cols.append("status")
            self.columns = cols

    @property
    def partial(self):
        return any(r.get("status") in FAILED_STATUSES for r in self.rows)

    def status_counts(self):
        counts = {}
        for r in self.rows:
            s = r.get("status", "ok")
            counts[s] = counts.get(s, 0) + 1
        return dict(sorted(counts.items()))


@dataclass
class FigureResult:
    figure: int
    panels: list
    manifest: dict

    @property
    def partial(self):
        return any(p.partial for p in self.panels)


# --------------------------------------------------------------- output

def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x) + 0.0, ".17g")  # + 0.0 drops the sign of zero
    return str(x)


def csv_text(panel: Panel) -> str:
    lines = [",".join(panel.columns)]
    for row in panel.rows:
        lines.append(",".join(_fmt(row.get(c)) for c in panel.columns))
    return "\n".join(lines) + "\n"


def write_csv(path, panel: Panel) -> bytes:
    data = csv_text(panel).encode()
    Path(path).write_bytes(data)
    return data


def blob_sha1(data: bytes) -> str:
    """Content hash computed the way git hashes a blob."""
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def _rows(records, series=None):
    out = []
    for rec in records:
        row = {"series": series} if series is not None else {}
        row.update(rec.as_dict())
        out.append(row)
    return out


# ------------------------------------------------------------ utilities

def _split_overrides(overrides):
    params, opts = {}, dict(FIGURE_OPTIONS)
    for key, value in (overrides or {}).items():
        if key in KNOWN:
            params[key] = value
        elif key in FIGURE_OPTIONS:
            try:
                opts[key] = int(value)
            except (TypeError, ValueError):
                raise ConfigError(f"figure option {key} must be an integer") from None
        else:
            raise ConfigError(f"unknown figure parameter {key!r}")
    if opts["points"] < 2 or opts["phi_points"] < 2 or opts["r_points"] < 2 or opts["cut_points"] < 2:
        raise ConfigError("point counts must be >= 2")
    return params, opts


def _sweep(model, fixed, axis, method=Method.BOTH, threads=1):
    return run_sweep(SweepSpec(model=model, axes=(axis,), fixed=fixed, method=method), threads)


def _argmin_1d(model, fixed, name, lo, hi, opts, scale="log"):
    """Exact N_st minimiser along one parameter, or None if nothing is stable."""
    try:
        rec = optimize_nst(model, fixed, {name: (lo, hi, scale)},
                           starts=opts["starts"], seed=opts["seed"], method=Method.LYAP)
    except NoStablePoint:
        return None
    return rec.resolved[f"opt_{name}"]


# -------------------------------------------------------------- figure 1

def _figure1(params, opts, threads):
    fixed = dict(params)
    n = opts["points"]
    omega = np.arange(-300, 301) / 100.0
    spec_rows = []
    for series, model in (("internal", Model.INTERNAL), ("none", Model.NONE)):
        r = resolve(model, fixed)
        p = LinearizedParams(**r)
        vals = spectrum_internal(p, omega)
        spec_rows += [{"series": series, "omega": float(w), "S_a": float(s), "status": "ok"}
                      for w, s in zip(omega, vals)]
    panels = [Panel("a", spec_rows)]
    axes = {
        "b": Axis("phi", 0.0, math.pi, n),
        "c": Axis("R", 0.0, R_MAX, n),
        "d": Axis("G_a", 1e-3, 1.0, n, "log"),
    }
    for name, axis in axes.items():
        rows = []
        for series, model in (("internal", Model.INTERNAL), ("none", Model.NONE)):
            rows += _rows(_sweep(model, fixed, axis, threads=threads), series)
        panels.append(Panel(name, rows))
    return panels, {}


# ---------------------------------------------------------- figures 2, 3

_ROW_MODELS = (("internal", Model.INTERNAL), ("injected", Model.INJECTED), ("none", Model.NONE))


def _row_panels(prefix, fixed, opts, threads):
    """Four panels (phi, delta_a, G_a, R) of one row at fixed kappa_a.

    The G_a column sits at the detunings where both squeezing schemes
    reach suppression with equal couplings; its minimiser G* is shared by
    the other columns.  The detuning column then fixes each model's own
    detuning optimum, through which the phase and ratio cuts pass.
    """
    kappa = float(resolve(Model.NONE, fixed)["kappa_a"])
    w = float(resolve(Model.NONE, fixed)["omega_m"])
    n = opts["points"]
    d_s, d_int = equal_coupling_detunings(kappa, w)
    g_hi = max(1.0, kappa)
    d_lo, d_hi = 0.05 * w, max(5.0 * w, 10.0 * kappa)
    col_delta = {"internal": d_int, "injected": d_s, "none": w}
    info = {}
    G_star, D_star = {}, {}
    rows = {"phi": [], "delta_a": [], "G_a": [], "R": []}

    for series, model in _ROW_MODELS:
        base = {**fixed, "delta_a": col_delta[series]}
        rows["G_a"] += _rows(_sweep(model, base, Axis("G_a", 1e-3, g_hi, n, "log"),
                                    threads=threads), series)
        G_star[series] = _argmin_1d(model, base, "G_a", 1e-3, g_hi, opts)
    g_shared = G_star["internal"] or G_star["injected"] or 0.1
    for series, model in _ROW_MODELS:
        g = g_shared if series != "none" else (G_star["none"] or 0.1)
        base = {**fixed, "G_a": g}
        rows["delta_a"] += _rows(_sweep(model, base, Axis("delta_a", d_lo, d_hi, n, "log"),
                                        threads=threads), series)
        D_star[series] = _argmin_1d(model, base, "delta_a", d_lo, d_hi, opts) or col_delta[series]
        at = {**base, "delta_a": D_star[series]}
        rows["phi"] += _rows(_sweep(model, at, Axis("phi", 0.0, math.pi, n), threads=threads), series)
        rows["R"] += _rows(_sweep(model, at, Axis("R", 0.0, R_MAX, n), threads=threads), series)
        info[series] = {"G_a": g, "delta_a": D_star[series]}
    panels = [Panel(f"{prefix}_{k}", v) for k, v in rows.items()]
    return panels, {"G_a_column_delta": col_delta, "row_optimum": info}


def _figure2(params, opts, threads):
    panels, notes = [], {}
    for i, kappa in enumerate((0.1, 1.0, 10.0), start=1):
        fixed = {**params, "kappa_a": kappa}
        p, info = _row_panels(f"row{i}", fixed, opts, threads)
        panels += p
        notes[f"row{i}"] = {"kappa_a": kappa, **info}
    return panels, notes


def _figure3(params, opts, threads):
    panels, notes = [], {}
    for i, n_T in enumerate((0.1, 1e5), start=1):
        fixed = {**params, "kappa_a": params.get("kappa_a", 1.0), "n_T": n_T}
        p, info = _row_panels(f"row{i}", fixed, opts, threads)
        panels += p
        notes[f"row{i}"] = {"n_T": n_T, **info}
    return panels, notes


# ---------------------------------------------------------- figures 4, 5

def _map_spec(model, fixed, opts, kappa, w):
    if model is Model.INTERNAL:
        axes = (Axis("phi", 0.0, math.pi, opts["phi_points"], "lin"),
                Axis("R", 0.0, R_MAX, opts["r_points"]))
        bounds = {"delta_a": (1e-2 * w, 10.0 * kappa, "log"), "G_a": (1e-3 * w, kappa, "log")}
    else:
        axes = (Axis("phi_s", 0.0, math.pi, opts["phi_points"], "lin"),
                Axis("R_s", 0.0, R_MAX, opts["r_points"]))
        bounds = {"delta_a_s": (1e-3 * w, 10.0 * kappa, "log"), "G_a_s": (1e-3 * w, 10.0 * kappa, "log")}
    return SweepSpec(model=model, axes=axes, fixed=fixed, minimize_over=bounds,
                     method=Method.LYAP, starts=opts["starts"], seed=opts["seed"])


def _unresolved_figure(fig, params, opts, threads):
    kappa = 10.0 if fig == 4 else 100.0
    fixed = {**params, "kappa_a": kappa}
    w = float(resolve(Model.NONE, fixed)["omega_m"])
    panels, notes = [], {"kappa_a": kappa, "cuts": {}}
    cut_rows = {"c": [], "d": [], "e": []}
    for label, series, model in (("a", "internal", Model.INTERNAL), ("b", "injected", Model.INJECTED)):
        spec = _map_spec(model, fixed, opts, kappa, w)
        records = run_sweep(spec, threads)
        panels.append(Panel(label, _rows(records, series)))
        phase_name, ratio_name = spec.axes[0].name, spec.axes[1].name
        good = [r for r in records if r.n_st_lyap is not None]
        if not good:
            notes["cuts"][series] = {"status": "no stable point on the map"}
            continue
        best = min(good, key=lambda r: r.n_st_lyap)
        # refine the grid minimum over all four parameters before cutting
        d_key, g_key = list(spec.minimize_over)
        full_bounds = {phase_name: (0.0, math.pi, "lin"), ratio_name: (0.0, R_MAX, "lin"),
                       **spec.minimize_over}
        guess = {**best.coords, d_key: best.resolved[f"opt_{d_key}"],
                 g_key: best.resolved[f"opt_{g_key}"]}
        refined = optimize_nst(model, fixed, full_bounds, starts=opts["starts"], seed=opts["seed"],
                               initial=[guess], method=Method.LYAP)
        phase = refined.resolved[f"opt_{phase_name}"]
        quoted = QUOTED_CUTS[fig][series]
        notes["cuts"][series] = {
            "phase": phase,
            "phase_over_pi": phase / math.pi,
            "quoted_phase_over_pi": quoted,
            "discrepancy_over_pi": phase / math.pi - quoted,
            "optimum_n_st": refined.n_st_lyap,
            "optimum": {k[4:]: v for k, v in refined.resolved.items() if k.startswith("opt_")},
            "map_minimum_n_st": best.n_st_lyap,
            "map_minimum_phase_over_pi": best.coords[phase_name] / math.pi,
            "map_minimum_ratio": best.coords[ratio_name],
        }
        cut_spec = SweepSpec(model=model, axes=(Axis(ratio_name, 0.0, R_MAX, opts["cut_points"]),),
                             fixed={**fixed, phase_name: phase}, minimize_over=spec.minimize_over,
                             method=Method.LYAP, starts=opts["starts"], seed=opts["seed"])
        cut = run_sweep(cut_spec, threads)
        for rec in cut:
            base = {"series": series, "R": rec.coords[ratio_name], phase_name.split("_")[0]: phase}
            cut_rows["c"].append({**base, "n_st_lyap": rec.n_st_lyap, "status": rec.status})
            cut_rows["d"].append({**base, "delta_a": rec.resolved.get(f"opt_{d_key}"), "status": rec.status})
            cut_rows["e"].append({**base, "G_a": rec.resolved.get(f"opt_{g_key}"), "status": rec.status})
    panels += [Panel(k, v) for k, v in cut_rows.items()]
    return panels, notes


# --------------------------------------------------------------- figure 6

FIG6 = {
    "g_a": 1e-6, "kappa_c": 500.0, "delta_c": 1.0,
    "G_a": 0.1, "kappa_a": 1.0, "delta_a": 1.0,
    "chi_0_scan": (1e-6, 3e-4), "g_c_scan": (1e-8, 1e-4),
    "g_c_fixed": 1e-6, "chi_0_fixed": 1e-4,
}


def _full_point(base, chi_0, g_c, method):
    """Full three-mode model at one (chi_0, g_c), drives found by mean-field inversion."""
    red = resolve(Model.INTERNAL, base)
    coords = {"chi_0": chi_0, "g_c": g_c}
    values = {**base, "chi_0": chi_0, "g_a": FIG6["g_a"], "g_c": g_c}
    rec = evaluate_point(Model.INTERNAL_FULL, values, method, coords=coords)
    if rec.status == "invalid":
        return rec
    # the same point reached through the nonlinear stationary state
    eff = LinearizedParams(**resolve(Model.INTERNAL_FULL, values))
    kc, dc = eff.kappa_c, eff.delta_c
    shift = eff.epsilon ** 2 / (kc ** 2 + dc ** 2)
    kappa_bare = eff.kappa_a - kc * shift
    if kappa_bare <= 0:
        return rec
    fm = FullModelParams(gamma=eff.gamma, n_T=eff.n_T, kappa_a=kappa_bare, kappa_c=kc,
                         delta_a_bar=0.0, delta_c_bar=0.0, g_a=FIG6["g_a"], g_c=g_c,
                         chi_0=chi_0, omega_m=eff.omega_m)
    targets = {"G_a": red["G_a"], "chi": red["chi"], "phi": red["phi"],
               "delta_a": eff.delta_a + dc * shift, "delta_c": dc}
    try:
        lin = linearize(fm, solve_mean_field(invert_targets(targets, fm)))
    except SqzCoolError as exc:
        rec.status, rec.message = "not_converged", str(exc)
        return rec
    rec.resolved["mf_G_c"] = lin.G_c
    rec.resolved["mf_epsilon"] = lin.epsilon
    return rec


def _figure6(params, opts, threads):
    base = {k: params.get(k, FIG6[k]) for k in ("G_a", "kappa_a", "delta_a", "kappa_c", "delta_c")}
    base.update({k: v for k, v in params.items() if k not in ("g_a", "g_c", "chi_0")})
    n = opts["points"]
    reduced = evaluate_point(Model.INTERNAL, base, Method.BOTH, coords={})
    panels = []
    for label, name, (lo, hi), other in (("a", "chi_0", FIG6["chi_0_scan"], FIG6["g_c_fixed"]),
                                         ("b", "g_c", FIG6["g_c_scan"], FIG6["chi_0_fixed"])):
        rows = []
        for x in np.geomspace(lo, hi, n):
            chi_0, g_c = (x, other) if name == "chi_0" else (other, x)
            rec = _full_point(base, float(chi_0), float(g_c), Method.BOTH)
            row = {"series": "full"}
            row.update(rec.as_dict())
            rows.append(row)
        for x in np.geomspace(lo, hi, n):
            row = {"series": "reduced"}
            row.update(reduced.as_dict())
            row.update({"chi_0": x if name == "chi_0" else other, "g_c": other if name == "chi_0" else x})
            rows.append(row)
        panels.append(Panel(label, rows))
    notes = {"g_a": FIG6["g_a"], "reduced_n_st_lyap": reduced.n_st_lyap,
             "reduced_n_st_pert": reduced.n_st_pert}
    return panels, notes


# ----------------------------------------------------------------- driver

def reproduce_figure(fig_id: int, overrides=None, out_dir=None, threads: int = 1) -> FigureResult:
    """Compute every panel of figure ``fig_id`` (1-6).

    ``overrides`` may hold model parameters (e.g. ``n_T``) and the sampling
    options in :data:`FIGURE_OPTIONS`.  With ``out_dir`` the panels are
    written as ``fig<id>_<panel>.csv`` next to ``manifest.json``.
    """
    builders = {1: _figure1, 2: _figure2, 3: _figure3,
                4: lambda p, o, t: _unresolved_figure(4, p, o, t),
                5: lambda p, o, t: _unresolved_figure(5, p, o, t), 6: _figure6}
    if fig_id not in builders:
        raise ConfigError(f"figure id must be 1-6, got {fig_id!r}")
    params, opts = _split_overrides(overrides)
    resolve(Model.NONE, {k: v for k, v in params.items()
                         if k not in ("chi_0", "g_a", "g_c", "R", "R_s")})
    t0 = time.perf_counter()
    panels, notes = builders[fig_id](params, opts, threads)
    runtime = time.perf_counter() - t0
    manifest = {
        "figure": fig_id,
        "parameters": {"overrides": params, "options": opts},
        "notes": notes,
        "runtime_s": runtime,
    }
    manifest = write_bundle(out_dir, panels, manifest, prefix=f"fig{fig_id}_")
    return FigureResult(fig_id, panels, manifest)


def write_bundle(out_dir, panels, manifest: dict, prefix: str = "") -> dict:
    """Write ``<prefix><panel>.csv`` files plus ``manifest.json``; return the manifest.

    With ``out_dir=None`` nothing is written but hashes are still filled in.
    """
    manifest = {"package_version": __version__, "python": platform.python_version(), **manifest,
                "panels": {}, "partial_panels": [p.name for p in panels if p.partial]}
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    for p in panels:
        data = csv_text(p).encode()
        fname = f"{prefix}{p.name}.csv"
        if out is not None:
            (out / fname).write_bytes(data)
        manifest["panels"][p.name] = {
            "file": fname,
            "columns": p.columns,
            "rows": len(p.rows),
            "sha1": blob_sha1(data),
            "partial": p.partial,
            "status_counts": p.status_counts(),
        }
    if out is not None:
        text = json.dumps(manifest, indent=2, sort_keys=True, default=_json_default)
        (out / "manifest.json").write_text(text + "\n")
    return manifest


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, Model):
        return x.value
    raise TypeError(f"cannot serialise {type(x).__name__}")
