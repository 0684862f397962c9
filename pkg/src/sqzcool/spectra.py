"""Closed-form cavity spectra and weak-coupling cooling rates.

Spectra are coupling-free; every power of the optomechanical coupling
lives in the rates, A_pm = G^2 S(-+omega_m).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core_model import InjectedModelParams, LinearizedParams
from .errors import Degenerate

__all__ = [
    "SpectrumKind",
    "SpectrumResult",
    "CoolingResult",
    "nu_zeta",
    "spectrum_internal",
    "spectrum_injected",
    "spectrum_pump",
    "spectrum_cross",
    "cooling_perturbative",
    "stationary_occupation",
    "evaluate_spectrum",
]


class SpectrumKind(str, enum.Enum):
    INTERNAL_SA = "internal_sa"
    INJECTED_SA = "injected_sa"
    PUMP_SC = "pump_sc"
    CROSS_SAC = "cross_sac"
    NUMERIC = "numeric"


@dataclass(frozen=True)
class SpectrumResult:
    omega_grid: np.ndarray
    values: np.ndarray
    kind: SpectrumKind


@dataclass(frozen=True)
class CoolingResult:
    """Scattering rates and the resulting stationary occupation.

    ``n_o`` and ``n_st`` are ``None`` when the perturbative description
    predicts heating (A_+ >= A_-).
    """

    a_plus: float
    a_minus: float
    gamma_opt: float
    n_o: float | None
    n_st: float | None
    method: str = "perturbative"

    @property
    def heating(self):
        return self.n_st is None


def nu_zeta(p: LinearizedParams, omega):
    """Return (nu(w), zeta(w)) of the internal-OPO cavity response."""
    omega = np.asarray(omega, dtype=float)
    nu = p.kappa_a + 1j * (p.delta_a + omega) + p.chi * np.exp(2j * p.phi)
    zeta = (p.kappa_a - 1j * omega) ** 2 + p.delta_a ** 2 - p.chi ** 2
    return nu, zeta


def _scalar_or_array(x, like):
    return float(x) if np.ndim(like) == 0 else x


def spectrum_internal(p: LinearizedParams, omega):
    """Amplitude-quadrature spectrum of the OPO cavity, 2 kappa |nu/zeta|^2."""
    nu, zeta = nu_zeta(p, omega)
    if np.any(np.abs(zeta) < 1e-300):
        raise Degenerate("zeta(omega) vanishes: cavity response is singular")
    return _scalar_or_array(2.0 * p.kappa_a * np.abs(nu / zeta) ** 2, omega)


def spectrum_injected(p: InjectedModelParams, omega):
    """Cavity spectrum under squeezed-vacuum injection (two-path interference form)."""
    omega = np.asarray(omega, dtype=float)
    k, d = p.kappa_a, p.delta_a_s
    amp = (np.sqrt(1.0 + p.n_s) / (k + 1j * (d - omega))
           + np.sqrt(p.n_s) * np.exp(2j * p.phi_s) / (k - 1j * (d + omega)))
    return _scalar_or_array(2.0 * k * np.abs(amp) ** 2, omega)


def spectrum_pump(p: LinearizedParams, omega):
    omega = np.asarray(omega, dtype=float)
    val = 2.0 * p.kappa_c / (p.kappa_c ** 2 + (p.delta_c - omega) ** 2)
    return _scalar_or_array(val, omega)


def spectrum_cross(p: LinearizedParams, omega):
    """First-order-in-epsilon spectrum of <X_c(t) X_a(0) + X_a(t) X_c(0)>.

    X_c here is the pump quadrature that drives the mechanics,
    cos(2 phi) X_c + sin(2 phi) Y_c.  Both orderings are summed, so the
    result is twice the single-ordering closed form.
    """
    omega = np.asarray(omega, dtype=float)
    nu, zeta = nu_zeta(p, omega)
    ka, kc, dc = p.kappa_a, p.kappa_c, p.delta_c
    e2 = np.exp(2j * p.phi)
    bracket = ((kc / ka) * zeta / (kc ** 2 + (dc - omega) ** 2)
               - (ka - 1j * (p.delta_a + omega)) / (kc + 1j * (dc - omega))
               - p.chi * e2 / (kc - 1j * (dc + omega)))
    single = 2.0 * ka * p.epsilon / np.abs(zeta) ** 2 * np.real(nu * np.conj(e2) * bracket)
    return _scalar_or_array(2.0 * single, omega)


def stationary_occupation(gamma, n_T, gamma_opt, n_o):
    return (gamma * n_T + gamma_opt * n_o) / (gamma + gamma_opt)


def _finish(a_plus, a_minus, gamma, n_T):
    a_plus, a_minus = float(a_plus), float(a_minus)
    gamma_opt = a_minus - a_plus
    if gamma_opt <= 0:
        return CoolingResult(a_plus, a_minus, gamma_opt, None, None)
    n_o = a_plus / gamma_opt
    return CoolingResult(a_plus, a_minus, gamma_opt, n_o,
                         stationary_occupation(gamma, n_T, gamma_opt, n_o))


def cooling_perturbative(p, include_pump: bool = False) -> CoolingResult:
    """Weak-coupling Stokes/anti-Stokes rates and the resulting N_st.

    Accepts :class:`LinearizedParams` (intracavity OPO, optionally with the
    pump-mode contributions) or :class:`InjectedModelParams`.
    """
    w = p.omega_m
    if isinstance(p, InjectedModelParams):
        if include_pump:
            raise ValueError("the injected model has no pump mode")
        G2 = p.G_a_s ** 2
        return _finish(G2 * spectrum_injected(p, -w), G2 * spectrum_injected(p, w),
                       p.gamma, p.n_T)
    rates = []
    for om in (-w, w):
        r = p.G_a ** 2 * spectrum_internal(p, om)
        if include_pump:
            r += p.G_c ** 2 * spectrum_pump(p, om) + p.G_a * p.G_c * spectrum_cross(p, om)
        rates.append(r)
    return _finish(rates[0], rates[1], p.gamma, p.n_T)


_EVALUATORS = {
    SpectrumKind.INTERNAL_SA: spectrum_internal,
    SpectrumKind.INJECTED_SA: spectrum_injected,
    SpectrumKind.PUMP_SC: spectrum_pump,
    SpectrumKind.CROSS_SAC: spectrum_cross,
}


def evaluate_spectrum(kind, p, omega_grid) -> SpectrumResult:
    kind = SpectrumKind(kind)
    grid = np.asarray(omega_grid, dtype=float)
    return SpectrumResult(grid, np.asarray(_EVALUATORS[kind](p, grid)), kind)
