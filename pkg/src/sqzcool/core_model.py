"""Parameter types and linear (drift, diffusion) models.

Conventions used throughout the package:

* every frequency and rate is in units of the mechanical frequency, so
  ``omega_m`` is normally 1;
* quadratures are X = o + o^dag and Y = -i (o - o^dag), so an isolated
  vacuum mode has unit variance;
* the covariance is V_ij = <R_i R_j + R_j R_i> / 2 and the phonon number
  is (V_XX + V_YY - 2) / 4.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import _kernels

__all__ = [
    "FullModelParams",
    "LinearizedParams",
    "InjectedModelParams",
    "LinearSystem",
    "StabilityReport",
    "build_internal_system",
    "build_injected_system",
    "build_from_coefficients",
    "stability",
    "renormalize_for_pump",
    "opo_threshold_ratio",
]

MS_TOL = 1e-12


def _check_finite(obj):
    for f in fields(obj):
        value = getattr(obj, f.name)
        if isinstance(value, (int, float, complex)) and not np.isfinite(value):
            raise ValueError(f"{type(obj).__name__}.{f.name} must be finite, got {value!r}")


def _check_positive(obj, *names):
    for name in names:
        if not getattr(obj, name) > 0:
            raise ValueError(f"{type(obj).__name__}.{name} must be > 0")


def _check_nonnegative(obj, *names):
    for name in names:
        if not getattr(obj, name) >= 0:
            raise ValueError(f"{type(obj).__name__}.{name} must be >= 0")


@dataclass(frozen=True)
class FullModelParams:
    """Single-photon parameters of the driven two-mode OPO with mechanics."""

    gamma: float
    n_T: float
    kappa_a: float
    kappa_c: float
    delta_a_bar: float
    delta_c_bar: float
    g_a: float
    g_c: float
    chi_0: float
    drive_a: complex = 0j
    drive_c: complex = 0j
    omega_m: float = 1.0

    def __post_init__(self):
        _check_finite(self)
        _check_positive(self, "omega_m", "gamma", "kappa_a", "kappa_c")
        _check_nonnegative(self, "n_T", "chi_0")
        for name in ("g_a", "g_c", "delta_a_bar", "delta_c_bar"):
            if isinstance(getattr(self, name), complex):
                raise ValueError(f"{name} must be real")


@dataclass(frozen=True)
class LinearizedParams:
    """Effective couplings and rates of the linearised fluctuation equations.

    ``chi``, ``G_a``, ``G_c`` and ``epsilon`` are magnitudes; the squeezing
    phase lives in ``phi``.  The pump-mode fields (``kappa_c``, ``delta_c``,
    ``G_c``, ``epsilon``) are only used by the three-mode model.
    """

    gamma: float
    n_T: float
    kappa_a: float
    delta_a: float
    G_a: float
    chi: float = 0.0
    phi: float = 0.0
    kappa_c: float = 1.0
    delta_c: float = 0.0
    G_c: float = 0.0
    epsilon: float = 0.0
    omega_m: float = 1.0

    def __post_init__(self):
        _check_finite(self)
        _check_positive(self, "omega_m", "gamma", "kappa_a", "kappa_c")
        _check_nonnegative(self, "n_T", "G_a", "G_c", "chi", "epsilon")

    @property
    def squeezing_ratio(self):
        return opo_threshold_ratio(self)

    def replace(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True)
class InjectedModelParams:
    """Standard optomechanical cavity driven by broadband squeezed vacuum.

    The input correlations are <a_in^dag a_in> = n_s and
    <a_in a_in> = m_s exp(-2i phi_s), with m_s = sqrt(n_s (n_s + 1)).
    ``m_s`` may be omitted and is then filled in.
    """

    gamma: float
    n_T: float
    kappa_a: float
    delta_a_s: float
    G_a_s: float
    n_s: float = 0.0
    phi_s: float = 0.0
    m_s: float | None = None
    omega_m: float = 1.0

    def __post_init__(self):
        if self.m_s is None:
            object.__setattr__(self, "m_s", math.sqrt(self.n_s * (self.n_s + 1.0)))
        _check_finite(self)
        _check_positive(self, "omega_m", "gamma", "kappa_a")
        _check_nonnegative(self, "n_T", "n_s", "G_a_s")
        expected = math.sqrt(self.n_s * (self.n_s + 1.0))
        if abs(self.m_s - expected) > MS_TOL * max(1.0, expected):
            raise ValueError(
                f"m_s={self.m_s!r} inconsistent with n_s={self.n_s!r}; "
                f"a pure squeezed input needs m_s = sqrt(n_s(n_s+1)) = {expected!r}"
            )

    def replace(self, **changes):
        if "n_s" in changes and "m_s" not in changes:
            changes["m_s"] = None
        return replace(self, **changes)


@dataclass(frozen=True)
class LinearSystem:
    """dR = drift R dt + noise, with <noise_i(t) noise_j(t')> = noise_corr_ij delta(t-t').

    ``noise_corr`` is the (Hermitian) non-symmetrised input correlation
    matrix needed for ordered spectra; ``diffusion`` is its real part.
    """

    drift: np.ndarray
    diffusion: np.ndarray
    ordering: tuple
    noise_corr: np.ndarray = field(repr=False, default=None)

    @property
    def modes(self):
        seen = []
        for mode, _ in self.ordering:
            if mode not in seen:
                seen.append(mode)
        return seen

    def index(self, mode, quadrature):
        return self.ordering.index((mode, quadrature))

    def quadrature_vector(self, weights):
        """Weight vector from ``{(mode, quad): weight}``."""
        vec = np.zeros(len(self.ordering))
        for key, w in weights.items():
            vec[self.index(*key)] = w
        return vec


@dataclass(frozen=True)
class StabilityReport:
    stable: bool
    max_real_eigenvalue: float
    opo_threshold_ratio: float


def opo_threshold_ratio(p):
    """R = chi / sqrt(kappa_a^2 + delta_a^2); R = 1 is the OPO threshold."""
    return p.chi / math.hypot(p.kappa_a, p.delta_a)


def _mode_noise(rate, n, m):
    """Quadrature noise correlations for <o o^dag> = n+1, <o^dag o> = n, <o o> = m."""
    return rate * np.array(
        [
            [2 * n + 1 + 2 * m.real, 2 * m.imag + 1j],
            [2 * m.imag - 1j, 2 * n + 1 - 2 * m.real],
        ]
    )


def build_from_coefficients(P, Q, inputs, labels):
    """Quadrature form of d o_j/dt = sum_k P_jk o_k + Q_jk o_k^dag + inputs.

    ``inputs`` holds one ``(rate, n, m)`` triple per mode.
    """
    P = np.asarray(P, dtype=complex)
    Q = np.asarray(Q, dtype=complex)
    M = P.shape[0]
    L = np.block([[P, Q], [Q.conj(), P.conj()]])
    T = np.zeros((2 * M, 2 * M), dtype=complex)
    for k in range(M):
        T[k, 2 * k], T[k, 2 * k + 1] = 0.5, 0.5j
        T[M + k, 2 * k], T[M + k, 2 * k + 1] = 0.5, -0.5j
    drift = np.linalg.solve(T, L @ T)
    if np.abs(drift.imag).max() > 1e-12 * max(1.0, np.abs(drift).max()):
        raise ValueError("coefficients do not define a real quadrature drift")
    noise = np.zeros((2 * M, 2 * M), dtype=complex)
    for k, (rate, n, m) in enumerate(inputs):
        noise[2 * k:2 * k + 2, 2 * k:2 * k + 2] = _mode_noise(rate, n, complex(m))
    ordering = tuple((lab, q) for lab in labels for q in ("X", "Y"))
    diffusion = noise.real.copy()
    return LinearSystem(drift.real.copy(), diffusion, ordering, noise)


def build_internal_system(p: LinearizedParams, include_pump: bool = False) -> LinearSystem:
    """Fluctuation equations with the intracavity OPO.

    Without the pump the modes are (a, b); with it they are (a, b, c) and the
    pump couples through ``epsilon`` and ``G_c``.
    """
    e2 = np.exp(2j * p.phi)
    Ga, w = p.G_a, p.omega_m
    if not include_pump:
        P = [[-(p.kappa_a + 1j * p.delta_a), 1j * Ga],
             [1j * Ga, -(p.gamma / 2 + 1j * w)]]
        Q = [[p.chi * e2, 1j * Ga],
             [1j * Ga, 0]]
        inputs = [(2 * p.kappa_a, 0.0, 0.0), (p.gamma, p.n_T, 0.0)]
        return build_from_coefficients(P, Q, inputs, ("a", "b"))
    Gc, eps = p.G_c, p.epsilon
    P = [[-(p.kappa_a + 1j * p.delta_a), 1j * Ga, eps],
         [1j * Ga, -(p.gamma / 2 + 1j * w), 1j * Gc * np.conj(e2)],
         [-eps, 1j * Gc * e2, -(p.kappa_c + 1j * p.delta_c)]]
    Q = [[p.chi * e2, 1j * Ga, 0],
         [1j * Ga, 0, 1j * Gc * e2],
         [0, 1j * Gc * e2, 0]]
    inputs = [(2 * p.kappa_a, 0.0, 0.0), (p.gamma, p.n_T, 0.0), (2 * p.kappa_c, 0.0, 0.0)]
    return build_from_coefficients(P, Q, inputs, ("a", "b", "c"))


def build_injected_system(p: InjectedModelParams) -> LinearSystem:
    G, w = p.G_a_s, p.omega_m
    P = [[-(p.kappa_a + 1j * p.delta_a_s), 1j * G],
         [1j * G, -(p.gamma / 2 + 1j * w)]]
    Q = [[0, 1j * G],
         [1j * G, 0]]
    m = p.m_s * np.exp(-2j * p.phi_s)
    inputs = [(2 * p.kappa_a, p.n_s, m), (p.gamma, p.n_T, 0.0)]
    return build_from_coefficients(P, Q, inputs, ("a", "b"))


def stability(sys: LinearSystem, p: LinearizedParams | None = None) -> StabilityReport:
    lam = float(np.linalg.eigvals(sys.drift).real.max())
    ratio = opo_threshold_ratio(p) if p is not None else 0.0
    return StabilityReport(lam < 0.0, lam, ratio)


def is_solvable(sys: LinearSystem) -> bool:
    """Stricter than ``stability``: keeps a margin from the threshold."""
    return _kernels.max_real_eig(np.ascontiguousarray(sys.drift)) <= _kernels.STABILITY_MARGIN


def renormalize_for_pump(p: LinearizedParams) -> LinearizedParams:
    """Pre-compensate mode a for the shift induced by adiabatically following mode c.

    Returns bare (kappa_a, delta_a) such that, once the pump mode is
    eliminated, mode a sees the linewidth and detuning stored in ``p``.
    """
    denom = p.kappa_c ** 2 + p.delta_c ** 2
    if denom <= 0:
        raise ValueError("kappa_c^2 + delta_c^2 must be positive")
    shift = p.epsilon ** 2 / denom
    kappa = p.kappa_a - p.kappa_c * shift
    if kappa <= 0:
        raise ValueError(
            f"renormalised kappa_a = {kappa:.6g} <= 0: mode coupling epsilon={p.epsilon:g} "
            "is too strong for the adiabatic correction"
        )
    return replace(p, kappa_a=kappa, delta_a=p.delta_a + p.delta_c * shift)
