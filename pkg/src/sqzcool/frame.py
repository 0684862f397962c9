"""Squeezed-frame map between the intracavity-OPO and injected-squeezing models.

For chi < |delta_a| a Bogoliubov rotation of the cavity mode removes the
parametric term of the reduced model.  The rotated mode behaves as a
plain optomechanical cavity with a smaller detuning, a rescaled coupling
and a squeezed-vacuum input.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core_model import (
    InjectedModelParams,
    LinearizedParams,
    build_injected_system,
    build_internal_system,
    opo_threshold_ratio,
)
from .errors import NotEquivalentRegime
from .lyapunov import phonon_number, steady_covariance

ROUNDOFF = 1e3 * np.finfo(float).eps  # minimum relative error assumed for a covariance entry

__all__ = [
    "SqueezedFrameParams",
    "EquivalenceReport",
    "squeezed_frame",
    "map_internal_to_injected",
    "map_injected_to_internal",
    "equivalence_certificate",
    "squeezing_ratio",
    "external_photon_number",
    "external_ratio",
]


@dataclass(frozen=True)
class SqueezedFrameParams:
    """Parameters of the squeezed-frame transformation.

    ``phi_s`` is the frame phase phi + phi' + pi/4 that enters the
    transformation; the squeezed input it produces has
    <a_in a_in> = cosh(s) sinh(s) exp(+2i phi_s), which is negative-signed
    when s < 0 (delta_a < 0).  ``input_phase`` absorbs that sign and
    re-expresses the phase in the injected-model convention
    (m_s exp(-2i phi_s), m_s >= 0) used by :class:`InjectedModelParams`.
    """

    s: float
    phi_s: float
    phi_prime: float
    n_s: float
    m_s: float
    delta_a_s: float
    G_a_s: float

    @property
    def input_phase(self):
        sign_shift = math.pi / 2 if self.s < 0 else 0.0
        return (-(self.phi_s + sign_shift)) % math.pi


@dataclass(frozen=True)
class EquivalenceReport:
    n_internal: float
    n_injected: float
    relative_difference: float
    tol: float

    @property
    def passed(self):
        return self.relative_difference <= self.tol


def squeezed_frame(p: LinearizedParams) -> SqueezedFrameParams:
    chi, delta = p.chi, p.delta_a
    if chi >= abs(delta):
        raise NotEquivalentRegime(
            f"chi={chi:g} >= |delta_a|={abs(delta):g}: the parametric term cannot be rotated away"
        )
    if chi == 0.0:
        s = 0.0
    else:
        # minus-branch root of chi t^2 - 2 delta t + chi = 0, written without cancellation
        root = math.sqrt(delta * delta - chi * chi)
        s = math.atanh(chi / (delta + math.copysign(root, delta)))
    C, S = math.cosh(s), math.sinh(s)
    n_s = S * S
    z = C + 1j * S * np.exp(-2j * p.phi)
    phi_prime = float(np.angle(z))
    return SqueezedFrameParams(
        s=s,
        phi_s=p.phi + phi_prime + math.pi / 4,
        phi_prime=phi_prime,
        n_s=n_s,
        m_s=math.sqrt(n_s * (n_s + 1.0)),
        delta_a_s=delta / (2.0 * n_s + 1.0),
        G_a_s=p.G_a * abs(z),
    )


def map_internal_to_injected(p: LinearizedParams) -> InjectedModelParams:
    fr = squeezed_frame(p)
    return InjectedModelParams(
        gamma=p.gamma, n_T=p.n_T, kappa_a=p.kappa_a,
        delta_a_s=fr.delta_a_s, G_a_s=fr.G_a_s,
        n_s=fr.n_s, phi_s=fr.input_phase, omega_m=p.omega_m,
    )


def map_injected_to_internal(q: InjectedModelParams) -> LinearizedParams:
    """Inverse of :func:`map_internal_to_injected`."""
    s = math.copysign(math.asinh(math.sqrt(q.n_s)), q.delta_a_s) if q.n_s > 0 else 0.0
    C, S = math.cosh(s), math.sinh(s)
    phi_frame = -q.phi_s - (math.pi / 2 if s < 0 else 0.0)
    phi_prime = math.atan(S * math.sin(2 * phi_frame) / (C + S * math.cos(2 * phi_frame)))
    delta = q.delta_a_s * math.cosh(2 * s)
    return LinearizedParams(
        gamma=q.gamma, n_T=q.n_T, kappa_a=q.kappa_a,
        delta_a=delta,
        G_a=q.G_a_s * abs(C + S * np.exp(2j * phi_frame)),
        chi=abs(delta * math.tanh(2 * s)),
        phi=(phi_frame - phi_prime - math.pi / 4) % math.pi,
        omega_m=q.omega_m,
    )


def _conditioning(sys):
    # |A| over the slowest decay rate: how much a Lyapunov solve amplifies round-off
    A = sys.drift
    decay = -float(np.linalg.eigvals(A).real.max())
    return float(np.abs(A).max()) / decay


def equivalence_certificate(p: LinearizedParams, tol: float = 1e-8) -> EquivalenceReport:
    """Compare exact phonon numbers of the internal model and its mapped injected twin.

    The difference is taken relative to the internal value.  When that
    value is itself at the round-off level of the covariances (no
    coupling at zero temperature, say) the denominator is floored so that
    round-off is compared against round-off.  The round-off level grows
    with the conditioning of the drift, since slowly decaying modes make
    the Lyapunov solve less accurate.
    """
    q = map_internal_to_injected(p)
    sys_int, sys_inj = build_internal_system(p), build_injected_system(q)
    cov_int, cov_inj = steady_covariance(sys_int), steady_covariance(sys_inj)
    n_int, n_inj = float(phonon_number(cov_int)), float(phonon_number(cov_inj))
    scale = max(np.abs(cov_int.matrix).max(), np.abs(cov_inj.matrix).max())
    cond = max(_conditioning(sys_int), _conditioning(sys_inj))
    roundoff = max(ROUNDOFF, np.finfo(float).eps * cond) * scale
    rel = abs(n_int - n_inj) / max(abs(n_int), roundoff / tol)
    return EquivalenceReport(n_int, n_inj, rel, tol)


def squeezing_ratio(p: LinearizedParams) -> float:
    r = opo_threshold_ratio(p)
    if r >= 1.0:
        raise ValueError(f"R = {r:g} is at or above the OPO threshold")
    return r


def external_photon_number(r_s: float) -> float:
    """Squeezed photons from a resonant external OPO run at R_s = chi_s / kappa_s."""
    if not 0.0 <= r_s < 1.0:
        raise ValueError(f"R_s must lie in [0, 1), got {r_s!r}")
    return 4.0 * r_s ** 2 / (r_s ** 2 - 1.0) ** 2


def external_ratio(n_s: float) -> float:
    """Inverse of :func:`external_photon_number` on [0, 1)."""
    if n_s < 0:
        raise ValueError("n_s must be >= 0")
    return math.sqrt(n_s) / (math.sqrt(1.0 + n_s) + 1.0)
