"""Closed-form conditions for full suppression of Stokes scattering."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core_model import InjectedModelParams, LinearizedParams
from .spectra import CoolingResult, stationary_occupation

__all__ = [
    "InternalOptimum",
    "InjectedOptimum",
    "SuppressionOptimum",
    "internal_optimum",
    "injected_optimum",
    "suppression_optimum",
    "rates_at_optimum",
    "equal_coupling_detunings",
]


class InternalOptimum(NamedTuple):
    phi: float
    chi: float
    r: float


class InjectedOptimum(NamedTuple):
    phi_s: float
    n_s: float
    r_s: float


@dataclass(frozen=True)
class SuppressionOptimum:
    phi_opt: float
    chi_opt: float
    r_opt: float
    n_s_opt: float | None = None
    phi_s_opt: float | None = None
    r_s_opt: float | None = None


def _half_angle(z):
    # only exp(2i phi) is physical, so report phi in [0, pi)
    return float(np.angle(z) / 2.0) % math.pi


def internal_optimum(kappa_a, delta_a, omega_m=1.0) -> InternalOptimum:
    chi = math.hypot(kappa_a, delta_a - omega_m)
    phase = -(kappa_a + 1j * (delta_a - omega_m)) / chi
    r = chi / math.hypot(kappa_a, delta_a)
    if r >= 1.0:
        warnings.warn(
            f"Stokes suppression needs R = {r:.4g} >= 1 (beyond the OPO threshold)",
            RuntimeWarning,
            stacklevel=2,
        )
    return InternalOptimum(_half_angle(phase), chi, r)


def injected_optimum(kappa_a, delta_a_s, omega_m=1.0) -> InjectedOptimum:
    if not delta_a_s * omega_m > 0:
        raise ValueError("Stokes suppression with injected squeezing needs delta_a_s > 0")
    lo = kappa_a ** 2 + (delta_a_s - omega_m) ** 2
    hi = kappa_a ** 2 + (delta_a_s + omega_m) ** 2
    phase = -((kappa_a - 1j * delta_a_s) ** 2 + omega_m ** 2) / math.sqrt(lo * hi)
    n_s = lo / (4.0 * delta_a_s * omega_m)
    r_s = (math.sqrt(hi) - 2.0 * math.sqrt(delta_a_s * omega_m)) / math.sqrt(lo)
    return InjectedOptimum(_half_angle(phase), n_s, r_s)


def suppression_optimum(kappa_a, delta_a, delta_a_s=None, omega_m=1.0) -> SuppressionOptimum:
    phi, chi, r = internal_optimum(kappa_a, delta_a, omega_m)
    if delta_a_s is None:
        return SuppressionOptimum(phi, chi, r)
    phi_s, n_s, r_s = injected_optimum(kappa_a, delta_a_s, omega_m)
    return SuppressionOptimum(phi, chi, r, n_s, phi_s, r_s)


def _lorentz(kappa, x):
    return 2.0 * kappa / (kappa ** 2 + x ** 2)


def rates_at_optimum(model: str, params) -> CoolingResult:
    """Rates once Stokes scattering is fully suppressed (A_+ = 0).

    ``model`` is ``"internal"`` (uses kappa_a, delta_a, G_a of a
    :class:`LinearizedParams`) or ``"injected"`` (kappa_a, delta_a_s, G_a_s of
    an :class:`InjectedModelParams`).  Squeezing fields are ignored.
    """
    w = params.omega_m
    if model == "internal":
        if not isinstance(params, LinearizedParams):
            raise TypeError("internal model needs LinearizedParams")
        a_minus = params.G_a ** 2 * _lorentz(params.kappa_a, params.delta_a - w)
    elif model == "injected":
        if not isinstance(params, InjectedModelParams):
            raise TypeError("injected model needs InjectedModelParams")
        k, d = params.kappa_a, params.delta_a_s
        a_minus = params.G_a_s ** 2 * (_lorentz(k, d - w) - _lorentz(k, d + w))
    else:
        raise ValueError(f"unknown model {model!r}")
    if a_minus <= 0:
        return CoolingResult(0.0, a_minus, a_minus, None, None)
    n_st = stationary_occupation(params.gamma, params.n_T, a_minus, 0.0)
    return CoolingResult(0.0, a_minus, a_minus, 0.0, n_st)


def equal_coupling_detunings(kappa_a, omega_m=1.0):
    """(delta_a_s, delta_a) at which both models reach suppression with G_a = G_a_s."""
    if omega_m <= 0:
        raise ValueError("omega_m must be > 0")
    return omega_m, (kappa_a ** 2 + 2.0 * omega_m ** 2) / (2.0 * omega_m)
