"""Exact stationary second moments of a :class:`LinearSystem`."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_continuous_lyapunov

from . import _kernels
from .core_model import LinearSystem
from .errors import IllConditioned, Unstable
from .spectra import SpectrumKind, SpectrumResult

__all__ = ["SteadyCovariance", "steady_covariance", "phonon_number", "numeric_spectrum"]

RESIDUAL_TOL = 1e-10
HEISENBERG_SLACK = 1e-9


@dataclass(frozen=True)
class SteadyCovariance:
    matrix: np.ndarray
    ordering: tuple
    residual: float

    def block(self, mode):
        i = self.ordering.index((mode, "X"))
        return self.matrix[i:i + 2, i:i + 2]

    def min_variance(self, mode="a"):
        """Smallest eigenvalue of the mode's 2x2 block (< 1 means squeezed)."""
        return float(np.linalg.eigvalsh(self.block(mode))[0])

    def heisenberg_ok(self):
        modes = dict.fromkeys(m for m, _ in self.ordering)
        return all(np.linalg.det(self.block(m)) >= 1 - HEISENBERG_SLACK for m in modes)


def _residual(A, V, D):
    return float(np.abs(A @ V + V @ A.T + D).max())


def _check_stable(A):
    lam = float(_kernels.max_real_eig(np.ascontiguousarray(A)))
    if lam > _kernels.STABILITY_MARGIN:
        raise Unstable(lam)


def steady_covariance(sys: LinearSystem, max_refine: int = 2) -> SteadyCovariance:
    """Solve A V + V A^T + D = 0 (Bartels-Stewart) with residual-driven refinement."""
    A, D = sys.drift, sys.diffusion
    _check_stable(A)
    V = solve_continuous_lyapunov(A, -D)
    V = 0.5 * (V + V.T)
    tol = RESIDUAL_TOL * max(np.abs(D).max(), np.finfo(float).tiny)
    res = _residual(A, V, D)
    for _ in range(max_refine):
        if res <= tol:
            break
        R = A @ V + V @ A.T + D
        dV = solve_continuous_lyapunov(A, -R)
        V = V + 0.5 * (dV + dV.T)
        res = _residual(A, V, D)
    if res > tol:
        raise IllConditioned(f"Lyapunov residual {res:.3e} exceeds {tol:.3e}")
    return SteadyCovariance(V, sys.ordering, res)


def phonon_number(cov: SteadyCovariance, mode: str = "b") -> float:
    """(V_XX + V_YY - 2) / 4 for ``mode``."""
    i = cov.ordering.index((mode, "X"))
    j = cov.ordering.index((mode, "Y"))
    return 0.25 * (cov.matrix[i, i] + cov.matrix[j, j] - 2.0)


def _weights(sys, spec):
    if isinstance(spec, tuple) and len(spec) == 2 and isinstance(spec[0], str):
        return sys.quadrature_vector({spec: 1.0})
    if isinstance(spec, dict):
        return sys.quadrature_vector(spec)
    vec = np.asarray(spec, dtype=float)
    if vec.shape != (len(sys.ordering),):
        raise ValueError("quadrature weights must match the system size")
    return vec


def numeric_spectrum(sys: LinearSystem, which, omega_grid, kind=None, symmetrize_pair=False):
    """Spectrum int dt e^{i w t} <u.R(t) v.R(0)> from the drift resolvent.

    ``which`` is ``u`` or ``(u, v)``; each entry may be a ``(mode, quad)``
    label, a ``{(mode, quad): weight}`` map or a raw weight vector.  With
    ``symmetrize_pair`` the result is <u(t) v(0)> + <v(t) u(0)>, the form
    used for the pump/signal cross-correlation.  The spectrum is *not*
    symmetrised in time: its asymmetry in w is what separates Stokes from
    anti-Stokes scattering.
    """
    if isinstance(which, list) or (isinstance(which, tuple) and len(which) == 2
                                   and not isinstance(which[0], str)):
        u_spec, v_spec = which
    else:
        u_spec = v_spec = which
    u = _weights(sys, u_spec)
    v = _weights(sys, v_spec)
    _check_stable(sys.drift)
    A = sys.drift
    C = sys.noise_corr if sys.noise_corr is not None else sys.diffusion.astype(complex)
    w = np.atleast_1d(np.asarray(omega_grid, dtype=float))
    n = A.shape[0]
    eye = np.eye(n)
    # M(w) = (-i w - A)^{-1};  S(w) = M(w) C M(-w)^T
    Mt_plus = np.linalg.solve(np.transpose(-1j * w[:, None, None] * eye - A, (0, 2, 1)),
                              np.broadcast_to(np.stack([u, v], axis=1), (w.size, n, 2)))
    Mt_minus = np.linalg.solve(np.transpose(1j * w[:, None, None] * eye - A, (0, 2, 1)),
                               np.broadcast_to(np.stack([u, v], axis=1), (w.size, n, 2)))
    # Mt_plus[:, :, 0] = M(w)^T u ; Mt_minus[:, :, 1] = M(-w)^T v
    uv = np.einsum("ki,ij,kj->k", Mt_plus[:, :, 0], C, Mt_minus[:, :, 1])
    if symmetrize_pair:
        uv = uv + np.einsum("ki,ij,kj->k", Mt_plus[:, :, 1], C, Mt_minus[:, :, 0])
    return SpectrumResult(w, uv.real, kind if kind is not None else SpectrumKind.NUMERIC)
