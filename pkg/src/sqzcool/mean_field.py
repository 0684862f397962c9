"""Classical steady state of the driven OPO + mechanics and its linearisation."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np
from scipy.optimize import root

from .core_model import FullModelParams, LinearizedParams
from .errors import NotConverged

__all__ = ["MeanFieldSolution", "solve_mean_field", "linearize", "invert_targets", "residuals"]

DAMPING = 0.5
SEED_SPREAD = 0.1
BRANCH_TOL = 1e-6
STALL_WINDOW = 200  # iterations allowed without halving the residual
RAMP_STEPS = 20


@dataclass(frozen=True)
class MeanFieldSolution:
    """Stationary amplitudes in the frame where <a> is real and non-negative.

    ``frame_phase`` is the phase removed from <a> (and twice it from <c>).
    """

    a_st: complex
    c_st: complex
    b_st: complex
    delta_a: float
    delta_c: float
    residual: float
    converged: bool
    multiple_solutions: bool = False
    frame_phase: float = 0.0


def _shifted(p, b):
    x = 2.0 * b.real
    return p.delta_a_bar - p.g_a * x, p.delta_c_bar - p.g_c * x


def _b_of(p, a, c):
    return 1j * (p.g_a * abs(a) ** 2 + p.g_c * abs(c) ** 2) / (p.gamma / 2 + 1j * p.omega_m)


def residuals(p: FullModelParams, a, c, b):
    """Relative residuals of the three stationarity relations."""
    da, dc = _shifted(p, b)
    ra = [-(p.kappa_a + 1j * da) * a, p.chi_0 * a.conjugate() * c, p.drive_a]
    rc = [-(p.kappa_c + 1j * dc) * c, -0.5 * p.chi_0 * a * a, p.drive_c]
    rb = [-(p.gamma / 2 + 1j * p.omega_m) * b,
          1j * (p.g_a * abs(a) ** 2 + p.g_c * abs(c) ** 2)]
    out = []
    for terms in (ra, rc, rb):
        scale = max(abs(t) for t in terms)
        out.append(abs(sum(terms)) / scale if scale > 0 else 0.0)
    return tuple(out)


def _picard(p, a, c, b, tol, max_iter):
    res = max(residuals(p, a, c, b))
    checkpoint = res
    for it in range(1, max_iter + 1):
        if res <= tol:
            return a, c, b, res, True
        if it % STALL_WINDOW == 0:
            if not res < 0.5 * checkpoint:
                return a, c, b, res, False
            checkpoint = res
        da, dc = _shifted(p, b)
        denom = p.kappa_a ** 2 + da ** 2 - p.chi_0 ** 2 * abs(c) ** 2
        a_new = (p.drive_a * (p.kappa_a - 1j * da) + p.drive_a.conjugate() * p.chi_0 * c) / denom
        c_new = (p.drive_c - 0.5 * p.chi_0 * a_new * a_new) / (p.kappa_c + 1j * dc)
        b_new = _b_of(p, a_new, c_new)
        a = (1 - DAMPING) * a + DAMPING * a_new
        c = (1 - DAMPING) * c + DAMPING * c_new
        b = (1 - DAMPING) * b + DAMPING * b_new
        res = max(residuals(p, a, c, b))
        if not all(map(cmath.isfinite, (a, c, b))):
            return a, c, b, math.inf, False
    return a, c, b, res, res <= tol


def _stationarity(p, x):
    a, c, b = complex(x[0], x[1]), complex(x[2], x[3]), complex(x[4], x[5])
    da, dc = _shifted(p, b)
    ra = -(p.kappa_a + 1j * da) * a + p.chi_0 * a.conjugate() * c + p.drive_a
    rc = -(p.kappa_c + 1j * dc) * c - 0.5 * p.chi_0 * a * a + p.drive_c
    rb = -(p.gamma / 2 + 1j * p.omega_m) * b + 1j * (p.g_a * abs(a) ** 2 + p.g_c * abs(c) ** 2)
    return [ra.real, ra.imag, rc.real, rc.imag, rb.real, rb.imag]


def _newton(p, a, c, b, tol):
    """Hybrid Newton fallback for points where the fixed-point map is not contracting."""
    x0 = np.array([a.real, a.imag, c.real, c.imag, b.real, b.imag])
    sol = root(lambda x: _stationarity(p, x), x0, method="hybr", options={"xtol": 1e-15})
    a, c, b = (complex(sol.x[0], sol.x[1]), complex(sol.x[2], sol.x[3]),
               complex(sol.x[4], sol.x[5]))
    res = max(residuals(p, a, c, b))
    return a, c, b, res, res <= tol


def _seeds(p):
    a0 = p.drive_a / (p.kappa_a + 1j * p.delta_a_bar)
    c0 = p.drive_c / (p.kappa_c + 1j * p.delta_c_bar)
    b0 = _b_of(p, a0, c0)
    yield 0j, 0j, 0j
    yield a0, c0, b0
    for f in (1 + SEED_SPREAD, 1 - SEED_SPREAD):
        yield a0 * f, c0 * f, b0 * f


def _ramp(p, tol):
    """Follow the branch reached by switching both drives on gradually."""
    a = c = b = 0j
    for lam in np.linspace(0.0, 1.0, RAMP_STEPS + 1)[1:]:
        q = replace(p, drive_a=lam * p.drive_a, drive_c=lam * p.drive_c)
        a, c, b, res, ok = _newton(q, a, c, b, tol if lam == 1.0 else 1e-9)
        if not ok:
            return a, c, b, res, False
    return a, c, b, res, ok


def _same(x, y):
    scale = max(abs(v) for v in (*x, *y)) or 1.0
    return all(abs(u - v) <= BRANCH_TOL * scale for u, v in zip(x, y))


def solve_mean_field(p: FullModelParams, tol: float = 1e-12, max_iter: int = 10_000,
                     guesses=()) -> MeanFieldSolution:
    """Stationary amplitudes from several starting points.

    ``guesses`` (``(a, c, b)`` triples) are tried first.  Then four fixed
    seeds are iterated with damped fixed-point steps, a seed whose
    iteration stalls (no halving of the residual within a window) being
    handed to a hybrid Newton solve, and finally the branch reached by
    ramping the drives up from zero is followed.  If converged starts land
    on different solutions ``multiple_solutions`` is set.  Preference goes
    to the first converged guess, then the ramped branch, then the
    decoupled-cavity seed.
    """
    if tol <= 0 or max_iter < 1:
        raise ValueError("need tol > 0 and max_iter >= 1")
    found = []
    worst = 0.0
    rank = 0
    for a, c, b in guesses:
        a, c, b, res, ok = _newton(p, complex(a), complex(c), complex(b), tol)
        if ok:
            found.append((a, c, b, res, rank))
        rank += 1
    ramp = _ramp(p, tol)
    if ramp[4]:
        found.append((*ramp[:4], rank))
    else:
        worst = ramp[3]
    for idx, seed in enumerate(_seeds(p)):
        a, c, b, res, ok = _picard(p, *seed, tol, max_iter)
        if not ok:
            a, c, b, res, ok = _newton(p, *seed, tol)
        if ok:
            # the decoupled-cavity seed ranks right after the ramp
            found.append((a, c, b, res, rank + 1 if idx == 1 else rank + 2 + idx))
        else:
            worst = max(worst, res)
    if not found:
        raise NotConverged(worst)
    distinct = []
    for sol in found:
        if not any(_same(sol[:3], d[:3]) for d in distinct):
            distinct.append(sol)
    a, c, b, res, _ = min(found, key=lambda sol: sol[4])
    alpha = cmath.phase(a) if a != 0 else 0.0
    rot = cmath.exp(-1j * alpha)
    da, dc = _shifted(p, b)
    return MeanFieldSolution(
        a_st=abs(a) + 0j,
        c_st=c * rot * rot,
        b_st=b,
        delta_a=da,
        delta_c=dc,
        residual=res,
        converged=True,
        multiple_solutions=len(distinct) > 1,
        frame_phase=alpha,
    )


def linearize(p: FullModelParams, mf: MeanFieldSolution) -> LinearizedParams:
    """Effective couplings about a converged stationary point.

    Couplings are reported as magnitudes; the squeezing phase is
    arg(<c>) / 2 in the frame where <a> is real.
    """
    if not mf.converged:
        raise ValueError("cannot linearise about an unconverged mean field")
    a, c = abs(mf.a_st), abs(mf.c_st)
    phi = (cmath.phase(mf.c_st) / 2.0) % math.pi if c > 0 else 0.0
    return LinearizedParams(
        gamma=p.gamma, n_T=p.n_T,
        kappa_a=p.kappa_a, delta_a=mf.delta_a,
        kappa_c=p.kappa_c, delta_c=mf.delta_c,
        G_a=abs(p.g_a) * a, G_c=abs(p.g_c) * c,
        chi=p.chi_0 * c, epsilon=p.chi_0 * a,
        phi=phi, omega_m=p.omega_m,
    )


def invert_targets(targets: Mapping[str, float], p: FullModelParams,
                   tol: float = 1e-12, check: bool = True) -> FullModelParams:
    """Drive amplitudes that produce the requested linearised couplings.

    ``targets`` holds ``G_a`` and ``chi``, optionally ``phi`` (default 0)
    and shifted detunings ``delta_a``/``delta_c``; when a shifted detuning
    is given the bare one in ``p`` is adjusted to reproduce it.  With
    ``check`` the result is fed back through :func:`solve_mean_field`,
    seeded with the target amplitudes, and must reproduce the targets.
    Other branches may coexist; they are flagged by the solver, not here.
    """
    G_a, chi = float(targets["G_a"]), float(targets["chi"])
    phi = float(targets.get("phi", 0.0))
    if G_a < 0 or chi < 0:
        raise ValueError("targets must be non-negative")
    if G_a > 0 and p.g_a == 0:
        raise ValueError("G_a > 0 needs g_a != 0")
    if chi > 0 and p.chi_0 == 0:
        raise ValueError("chi > 0 needs chi_0 > 0")
    a = G_a / abs(p.g_a) if G_a > 0 else 0.0
    c = (chi / p.chi_0) * cmath.exp(2j * phi) if chi > 0 else 0j
    a = complex(a)
    b = _b_of(p, a, c)
    x = 2.0 * b.real
    changes = {}
    if "delta_a" in targets:
        changes["delta_a_bar"] = float(targets["delta_a"]) + p.g_a * x
    if "delta_c" in targets:
        changes["delta_c_bar"] = float(targets["delta_c"]) + p.g_c * x
    q = replace(p, **changes)
    da, dc = _shifted(q, b)
    drive_a = (q.kappa_a + 1j * da) * a - q.chi_0 * a.conjugate() * c
    drive_c = (q.kappa_c + 1j * dc) * c + 0.5 * q.chi_0 * a * a
    out = replace(q, drive_a=drive_a, drive_c=drive_c)
    if check and (G_a > 0 or chi > 0):
        lin = linearize(out, solve_mean_field(out, tol=tol, guesses=[(a, c, b)]))
        for name, want, got in (("G_a", G_a, lin.G_a), ("chi", chi, lin.chi)):
            err = abs(got - want)
            if err > 1e-8 * want + 1e-12:
                raise NotConverged(err / max(want, 1e-12),
                                   f"mean field settled on another branch: {name}={got:g}, target {want:g}")
    return out
