"""Parameter resolution, grid sweeps and constrained minimisation of N_st.

Parameters are passed around as flat ``{name: value}`` maps.  A value may
be the string ``"opt"`` for the squeezing parameters, meaning "use the
Stokes-suppression optimum at the current (kappa_a, delta_a)".  The
squeezing strength may be given either directly (``chi``, ``n_s``) or as
a ratio (``R`` for the internal OPO, ``R_s`` for an external one).
"""
from __future__ import annotations

import enum
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Mapping

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from . import _kernels
from .core_model import (
    InjectedModelParams,
    LinearizedParams,
    build_injected_system,
    build_internal_system,
    renormalize_for_pump,
)
from .errors import ConfigError, IllConditioned, NoStablePoint, SqzCoolError, Unstable
from .frame import external_photon_number
from .lyapunov import phonon_number, steady_covariance
from .optimal import injected_optimum, internal_optimum
from .spectra import cooling_perturbative

__all__ = [
    "Model",
    "Method",
    "Axis",
    "SweepSpec",
    "SweepRecord",
    "DEFAULTS",
    "resolve",
    "to_params",
    "evaluate_point",
    "run_sweep",
    "optimize_nst",
    "default_bounds",
    "RESULT_FIELDS",
]

OPT = "opt"
R_MAX = 0.999
PENALTY = 1e3
STATUSES = ("ok", "unstable", "heating", "not_converged", "invalid")


class Model(str, enum.Enum):
    INTERNAL = "internal"
    INTERNAL_FULL = "internal-full"
    INJECTED = "injected"
    NONE = "none"


class Method(str, enum.Enum):
    PERT = "pert"
    LYAP = "lyap"
    BOTH = "both"


# Defaults reproduce the single-point parameters of the first figure.
DEFAULTS = {
    "omega_m": 1.0,
    "gamma": 0.25e-6,
    "n_T": 1000.0,
    "kappa_a": 1.0,
    "delta_a": 1.0,
    "G_a": 0.1,
    "chi": OPT,
    "phi": OPT,
    "kappa_c": 500.0,
    "delta_c": 1.0,
    "G_c": 0.0,
    "epsilon": 0.0,
    "n_s": OPT,
    "phi_s": OPT,
}

KNOWN = set(DEFAULTS) | {"R", "R_s", "delta_a_s", "G_a_s", "chi_0", "g_a", "g_c"}

# injected-model name -> shared name it falls back to
_INJECTED_ALIASES = {"delta_a_s": "delta_a", "G_a_s": "G_a", "phi_s": "phi", "R_s": "R"}


def _num(name, value):
    if isinstance(value, str):
        if value.strip().lower() == OPT:
            return OPT
        try:
            value = float(value)
        except ValueError:
            raise ConfigError(f"{name}: cannot read {value!r} as a number") from None
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{name} must be finite")
    return value


def _quiet_internal_optimum(kappa, delta, omega_m):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return internal_optimum(kappa, delta, omega_m)


def resolve(model, values: Mapping) -> dict:
    """Turn a user parameter map into plain floats for ``model``.

    Unknown names raise :class:`ConfigError`.  Physically invalid
    combinations (for instance an injected optimum with delta_a_s <= 0)
    raise ``ValueError``.
    """
    model = Model(model)
    unknown = set(values) - KNOWN
    if unknown:
        raise ConfigError(f"unknown parameter(s): {', '.join(sorted(unknown))}")
    v = {k: _num(k, x) for k, x in {**DEFAULTS, **values}.items()}
    for name in ("omega_m", "gamma", "n_T", "kappa_a", "delta_a", "G_a"):
        if v[name] == OPT:
            raise ConfigError(f"{name} cannot be 'opt'")
    out = {k: v[k] for k in ("omega_m", "gamma", "n_T", "kappa_a")}
    w = out["omega_m"]

    if model is Model.INJECTED:
        def pick(name):
            if name in values:
                return v[name]
            alias = _INJECTED_ALIASES.get(name)
            if alias in values:
                return v[alias]
            return v.get(name, v.get(alias))

        delta_s, G_s = pick("delta_a_s"), pick("G_a_s")
        n_s, phi_s, r_s = pick("n_s"), pick("phi_s"), pick("R_s")
        if OPT in (delta_s, G_s):
            raise ConfigError("delta_a_s and G_a_s cannot be 'opt'")
        opt = None
        if OPT in (n_s, phi_s, r_s):
            opt = injected_optimum(out["kappa_a"], delta_s, w)
        if r_s is not None:
            n_s = opt.n_s if r_s == OPT else external_photon_number(min(r_s, R_MAX))
        elif n_s == OPT:
            n_s = opt.n_s
        if phi_s == OPT:
            phi_s = opt.phi_s
        out.update(delta_a_s=delta_s, G_a_s=G_s, n_s=n_s, phi_s=phi_s)
        return out

    kappa, delta = out["kappa_a"], v["delta_a"]
    out.update(delta_a=delta, G_a=v["G_a"])
    if model is Model.NONE:
        out.update(chi=0.0, phi=0.0)
    else:
        chi, phi, r = v["chi"], v["phi"], v.get("R")
        opt = None
        if OPT in (chi, phi, r):
            opt = _quiet_internal_optimum(kappa, delta, w)
        if r is not None:
            chi = opt.chi if r == OPT else min(r, R_MAX) * math.hypot(kappa, delta)
        elif chi == OPT:
            chi = opt.chi
        out.update(chi=chi, phi=opt.phi if phi == OPT else phi)
    if model is Model.INTERNAL_FULL:
        for name in ("kappa_c", "delta_c", "G_c", "epsilon"):
            if v[name] == OPT:
                raise ConfigError(f"{name} cannot be 'opt'")
            out[name] = v[name]
        if "chi_0" in values:
            chi_0, g_a, g_c = v["chi_0"], v.get("g_a"), v.get("g_c")
            if g_a is None or g_c is None:
                raise ConfigError("chi_0 needs g_a and g_c")
            if chi_0 <= 0 or g_a == 0:
                raise ValueError("chi_0 > 0 and g_a != 0 are required")
            out["epsilon"] = chi_0 * out["G_a"] / abs(g_a)
            out["G_c"] = abs(g_c) * out["chi"] / chi_0
    return out


def to_params(model, r: Mapping):
    """Parameter dataclass for a map produced by :func:`resolve`."""
    model = Model(model)
    if model is Model.INJECTED:
        return InjectedModelParams(**r)
    return LinearizedParams(**r)


def _ratio(r):
    if "chi" not in r:
        return None
    return r["chi"] / math.hypot(r["kappa_a"], r["delta_a"])


# ---------------------------------------------------------------- records

RESULT_FIELDS = ("n_st_pert", "n_st_lyap", "a_plus", "a_minus", "gamma_opt", "n_o", "stable")


@dataclass
class SweepRecord:
    """Outcome at one parameter point.

    ``coords`` holds the swept (or requested) coordinates, ``resolved``
    the squeezing parameters actually used plus any minimiser values.
    Missing results are ``None``.
    """

    coords: dict
    resolved: dict = field(default_factory=dict)
    n_st_pert: float | None = None
    n_st_lyap: float | None = None
    a_plus: float | None = None
    a_minus: float | None = None
    gamma_opt: float | None = None
    n_o: float | None = None
    stable: bool | None = None
    status: str = "ok"
    message: str = ""

    @property
    def n_st(self):
        """Lyapunov value when present, else the perturbative one."""
        return self.n_st_lyap if self.n_st_lyap is not None else self.n_st_pert

    def as_dict(self):
        row = dict(self.coords)
        row.update(self.resolved)
        row.update({k: getattr(self, k) for k in RESULT_FIELDS})
        row["status"] = self.status
        return row


def _is_stable(model, r, p):
    if model in (Model.INTERNAL, Model.NONE):
        A = _kernels.internal_drift(r["kappa_a"], r["delta_a"], r["G_a"], r["chi"], r["phi"],
                                    r["gamma"], r["omega_m"])
    elif model is Model.INJECTED:
        A = _kernels.injected_drift(r["kappa_a"], r["delta_a_s"], r["G_a_s"], r["gamma"], r["omega_m"])
    else:
        A = np.ascontiguousarray(build_internal_system(p, include_pump=True).drift)
    return float(_kernels.max_real_eig(A)) <= _kernels.STABILITY_MARGIN


def _lyapunov_nst(model, p):
    if model is Model.INJECTED:
        sys = build_injected_system(p)
    elif model is Model.INTERNAL_FULL:
        sys = build_internal_system(p, include_pump=True)
    else:
        sys = build_internal_system(p)
    return float(phonon_number(steady_covariance(sys)))


def _resolved_columns(model, r):
    if model is Model.INJECTED:
        return {k: r[k] for k in ("delta_a_s", "G_a_s", "n_s", "phi_s")}
    cols = {k: r[k] for k in ("delta_a", "G_a", "chi", "phi")}
    cols["R"] = _ratio(r)
    if model is Model.INTERNAL_FULL:
        cols.update({k: r[k] for k in ("G_c", "epsilon")})
    return cols


def evaluate_point(model, values: Mapping, method=Method.BOTH, coords=None) -> SweepRecord:
    """Perturbative and/or exact N_st at one point; never raises for physics failures.

    For ``internal-full`` the perturbative rates use the effective
    (kappa_a, delta_a) stored in the map while the exact solve runs the
    three-mode model with pre-compensated bare values, so both describe
    the same effective cavity.
    """
    model, method = Model(model), Method(method)
    rec = SweepRecord(coords=dict(values if coords is None else coords))
    try:
        r = resolve(model, values)
        p = to_params(model, r)
    except ValueError as exc:
        rec.status, rec.message = "invalid", str(exc)
        return rec
    rec.resolved = _resolved_columns(model, r)
    lyap_p = p
    if model is Model.INTERNAL_FULL:
        try:
            lyap_p = renormalize_for_pump(p)
        except ValueError as exc:
            lyap_p, rec.message = None, str(exc)
    rec.stable = lyap_p is not None and _is_stable(model, r, lyap_p)

    if method in (Method.PERT, Method.BOTH):
        cr = cooling_perturbative(p, include_pump=model is Model.INTERNAL_FULL)
        rec.a_plus, rec.a_minus, rec.gamma_opt = cr.a_plus, cr.a_minus, cr.gamma_opt
        rec.n_o, rec.n_st_pert = cr.n_o, cr.n_st
    if method in (Method.LYAP, Method.BOTH) and rec.stable:
        try:
            n = _lyapunov_nst(model, lyap_p)
        except Unstable:
            rec.stable = False
        except IllConditioned as exc:
            rec.status, rec.message = "not_converged", str(exc)
        else:
            if math.isfinite(n) and n >= -1e-9:
                rec.n_st_lyap = max(n, 0.0)
            else:
                rec.status, rec.message = "not_converged", f"unphysical N_st={n!r}"

    if rec.status == "ok":
        if not rec.stable:
            rec.status = "unstable"
        elif rec.gamma_opt is not None and rec.gamma_opt <= 0:
            rec.status = "heating"
    return rec


# ------------------------------------------------------------------ sweeps

@dataclass(frozen=True)
class Axis:
    name: str
    lo: float
    hi: float
    count: int
    scale: str = "lin"

    def __post_init__(self):
        if self.name not in KNOWN:
            raise ConfigError(f"unknown axis parameter {self.name!r}")
        if self.count < 2:
            raise ConfigError(f"axis {self.name}: count must be >= 2")
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ConfigError(f"axis {self.name}: bounds must be finite")
        if self.scale not in ("lin", "log"):
            raise ConfigError(f"axis {self.name}: scale must be 'lin' or 'log'")
        if self.scale == "log" and not (self.lo > 0 and self.hi > 0):
            raise ConfigError(f"axis {self.name}: log scale needs positive bounds")

    def values(self):
        if self.scale == "log":
            return np.geomspace(self.lo, self.hi, self.count)
        return np.linspace(self.lo, self.hi, self.count)


def _check_bounds(bounds):
    out = {}
    for name, b in bounds.items():
        if name not in KNOWN:
            raise ConfigError(f"unknown parameter {name!r} in bounds")
        lo, hi, *rest = b
        scale = rest[0] if rest else "lin"
        lo, hi = float(lo), float(hi)
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise ConfigError(f"bounds for {name} must be finite with lo < hi")
        if scale not in ("lin", "log") or (scale == "log" and lo <= 0):
            raise ConfigError(f"bad scale for {name}")
        out[name] = (lo, hi, scale)
    return out


@dataclass(frozen=True)
class SweepSpec:
    """A 1- or 2-axis grid, optionally with an inner minimisation per point."""

    model: Model
    axes: tuple
    fixed: dict = field(default_factory=dict)
    minimize_over: dict | None = None
    method: Method = Method.BOTH
    starts: int = 8
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "model", Model(self.model))
        object.__setattr__(self, "method", Method(self.method))
        if not 1 <= len(self.axes) <= 2:
            raise ConfigError("a sweep needs one or two axes")
        names = [a.name for a in self.axes]
        if len(set(names)) != len(names):
            raise ConfigError("axis names must be distinct")
        unknown = set(self.fixed) - KNOWN
        if unknown:
            raise ConfigError(f"unknown parameter(s): {', '.join(sorted(unknown))}")
        if self.minimize_over:
            object.__setattr__(self, "minimize_over", _check_bounds(self.minimize_over))
            if set(self.minimize_over) & set(names):
                raise ConfigError("a parameter cannot be both swept and minimised")

    def points(self):
        """Grid points in row-major order (first axis slowest)."""
        for combo in product(*(a.values() for a in self.axes)):
            yield {a.name: float(x) for a, x in zip(self.axes, combo)}


def _sweep_point(spec, point):
    values = {**spec.fixed, **point}
    if not spec.minimize_over:
        return evaluate_point(spec.model, values, spec.method, coords=point)
    try:
        rec = optimize_nst(spec.model, values, spec.minimize_over,
                           starts=spec.starts, seed=spec.seed, method=spec.method)
    except NoStablePoint as exc:
        return SweepRecord(coords=point, stable=False, status="unstable", message=str(exc))
    except ValueError as exc:
        return SweepRecord(coords=point, status="invalid", message=str(exc))
    rec.coords = point
    return rec


def run_sweep(spec: SweepSpec, threads: int = 1) -> list:
    """Evaluate every grid point; output order is row-major regardless of ``threads``."""
    pts = list(spec.points())
    if threads <= 1:
        return [_sweep_point(spec, pt) for pt in pts]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda pt: _sweep_point(spec, pt), pts))


# ------------------------------------------------------------ minimisation

def _fast_log_nst(model, values):
    """log N_st through the compiled kernels, or None when unstable/invalid."""
    try:
        r = resolve(model, values)
    except ValueError:
        return None
    if model is Model.INJECTED:
        if r["n_s"] < 0 or r["kappa_a"] <= 0 or r["G_a_s"] < 0:
            return None
        n = _kernels.nst_injected(r["kappa_a"], r["delta_a_s"], r["G_a_s"], r["n_s"], r["phi_s"],
                                  r["gamma"], r["n_T"], r["omega_m"])
    elif model is Model.INTERNAL_FULL:
        try:
            n = _lyapunov_nst(model, renormalize_for_pump(to_params(model, r)))
        except (SqzCoolError, ValueError):
            return None
    else:
        if r["kappa_a"] <= 0 or r["G_a"] < 0 or r["chi"] < 0:
            return None
        n = _kernels.nst_internal(r["kappa_a"], r["delta_a"], r["G_a"], r["chi"], r["phi"],
                                  r["gamma"], r["n_T"], r["omega_m"])
    if not (math.isfinite(n) and n > 0):
        return None
    return math.log(n)


class _Objective:
    def __init__(self, model, fixed, bounds):
        self.model = model
        self.fixed = dict(fixed)
        self.names = list(bounds)
        self.log = np.array([bounds[k][2] == "log" for k in self.names])
        lo = np.array([bounds[k][0] for k in self.names], dtype=float)
        hi = np.array([bounds[k][1] for k in self.names], dtype=float)
        self.lo = np.where(self.log, np.log(np.where(self.log, lo, 1.0)), lo)
        self.hi = np.where(self.log, np.log(np.where(self.log, hi, 1.0)), hi)

    def decode(self, x):
        x = np.clip(x, self.lo, self.hi)
        x = np.where(self.log, np.exp(x), x)
        return dict(zip(self.names, map(float, x)))

    def encode(self, values):
        x = np.array([float(values[k]) for k in self.names])
        logx = np.log(np.where(self.log, np.maximum(x, 1e-300), 1.0))
        return np.clip(np.where(self.log, logx, x), self.lo, self.hi)

    def __call__(self, x):
        f = _fast_log_nst(self.model, {**self.fixed, **self.decode(x)})
        return PENALTY if f is None else f


def _polish(obj, x, f, steps=4):
    """Coordinate-wise 5-point grid refinement with a shrinking step."""
    h = 1e-2 * (obj.hi - obj.lo)
    for _ in range(steps):
        improved = True
        while improved:
            improved = False
            for i in range(x.size):
                for k in (-2, -1, 1, 2):
                    y = x.copy()
                    y[i] = min(max(y[i] + k * h[i], obj.lo[i]), obj.hi[i])
                    fy = obj(y)
                    if fy < f - 1e-15:
                        x, f, improved = y, fy, True
        h = h / 4.0
    return x, f


def optimize_nst(model, fixed: Mapping, bounds: Mapping, *, starts: int = 8, seed: int = 0,
                 initial=None, method=Method.BOTH, maxfev: int = 400) -> SweepRecord:
    """Minimise the exact N_st over the parameters named in ``bounds``.

    ``bounds`` maps names to ``(lo, hi)`` or ``(lo, hi, "log")``.  Each of
    ``starts`` Latin-hypercube points (plus any ``initial`` guesses) seeds
    a bounded Nelder-Mead run on log N_st; unstable trial points get a
    flat penalty.  The best run is refined on a local 5-point grid.  The
    minimiser values are stored in the record's ``resolved`` map.
    """
    model = Model(model)
    bounds = _check_bounds(bounds)
    if not bounds:
        raise ConfigError("optimize_nst needs at least one free parameter")
    obj = _Objective(model, fixed, bounds)
    d = len(obj.names)
    unit = qmc.LatinHypercube(d=d, seed=seed).random(starts) if starts > 0 else np.empty((0, d))
    seeds = [obj.lo + u * (obj.hi - obj.lo) for u in unit]
    seeds = [obj.encode(g) for g in (initial or [])] + seeds
    box = list(zip(obj.lo, obj.hi))
    best_x, best_f = None, math.inf
    for x0 in seeds:
        res = minimize(obj, x0, method="Nelder-Mead", bounds=box,
                       options={"maxfev": maxfev * d, "xatol": 1e-7, "fatol": 1e-10})
        if res.fun < best_f:
            best_x, best_f = np.asarray(res.x, dtype=float), float(res.fun)
    if best_x is None or best_f >= PENALTY:
        raise NoStablePoint(f"no stable point found for {model.value} within the bounds")
    best_x, best_f = _polish(obj, best_x, best_f)
    found = obj.decode(best_x)
    rec = evaluate_point(model, {**fixed, **found}, method)
    rec.resolved.update({f"opt_{k}": x for k, x in found.items()})
    return rec


def default_bounds(model, values):
    """Search box used by ``optimize`` when none is given."""
    r = resolve(Model.NONE, {k: v for k, v in values.items()
                             if k in ("kappa_a", "omega_m", "gamma", "n_T")})
    kappa, w = r["kappa_a"], r["omega_m"]
    if model is Model.INJECTED:
        return {"phi_s": (0.0, math.pi, "lin"), "R_s": (0.0, 0.999, "lin"),
                "delta_a_s": (1e-3 * w, 10.0 * max(kappa, w), "log"),
                "G_a_s": (1e-3 * w, 10.0 * max(kappa, w), "log")}
    bounds = {"delta_a": (1e-2 * w, 10.0 * max(kappa, w), "log"),
              "G_a": (1e-3 * w, max(kappa, w), "log")}
    if model is not Model.NONE:
        bounds = {"phi": (0.0, math.pi, "lin"), "R": (0.0, 0.999, "lin"), **bounds}
    return bounds
