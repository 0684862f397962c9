import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from sqzcool import (
    FullModelParams,
    InjectedModelParams,
    LinearizedParams,
    build_injected_system,
    build_internal_system,
    renormalize_for_pump,
    stability,
)
from sqzcool import _kernels
from sqzcool.core_model import opo_threshold_ratio

kappas = st.floats(0.05, 20.0)
detunings = st.floats(-10.0, 10.0)
phases = st.floats(0.0, math.pi)
ratios = st.floats(0.0, 0.98)


def optical_eigs(p):
    A = build_internal_system(p).drift
    return np.sort_complex(np.linalg.eigvals(A[:2, :2]))


# ---------------------------------------------------------------- parameters

def test_params_reject_nonpositive_rates():
    with pytest.raises(ValueError):
        LinearizedParams(gamma=0.0, n_T=1.0, kappa_a=1.0, delta_a=1.0, G_a=0.1)
    with pytest.raises(ValueError):
        LinearizedParams(gamma=1e-3, n_T=1.0, kappa_a=-1.0, delta_a=1.0, G_a=0.1)
    with pytest.raises(ValueError):
        LinearizedParams(gamma=1e-3, n_T=-1.0, kappa_a=1.0, delta_a=1.0, G_a=0.1)
    with pytest.raises(ValueError):
        LinearizedParams(gamma=1e-3, n_T=1.0, kappa_a=1.0, delta_a=math.nan, G_a=0.1)


def test_injected_fills_m_s():
    q = InjectedModelParams(gamma=1e-3, n_T=1.0, kappa_a=1.0, delta_a_s=1.0, G_a_s=0.1, n_s=0.25)
    assert q.m_s == pytest.approx(math.sqrt(0.25 * 1.25), rel=1e-15)
    assert q.m_s == pytest.approx(0.559017, abs=1e-6)
    assert q.replace(n_s=1.0).m_s == pytest.approx(math.sqrt(2.0))


def test_injected_rejects_impure_input():
    with pytest.raises(ValueError, match="m_s"):
        InjectedModelParams(gamma=1e-3, n_T=1.0, kappa_a=1.0, delta_a_s=1.0, G_a_s=0.1,
                            n_s=0.25, m_s=0.3)


def test_full_params_reject_complex_couplings():
    with pytest.raises(ValueError):
        FullModelParams(gamma=1e-3, n_T=1.0, kappa_a=1.0, kappa_c=1.0, delta_a_bar=1.0,
                        delta_c_bar=0.0, g_a=1e-6 + 0j, g_c=0.0, chi_0=0.0)


# ---------------------------------------------------------------- drift

def test_bare_mode_eigenvalues():
    p = LinearizedParams(gamma=1e-3, n_T=0.0, kappa_a=1.0, delta_a=1.0, G_a=0.0)
    np.testing.assert_allclose(optical_eigs(p), [-1 - 1j, -1 + 1j], atol=1e-14)


def test_threshold_degeneracy_at_chi_equal_delta():
    p = LinearizedParams(gamma=1e-3, n_T=0.0, kappa_a=0.7, delta_a=1.3, G_a=0.0, chi=1.3, phi=0.4)
    np.testing.assert_allclose(optical_eigs(p), [-0.7, -0.7], atol=1e-7)


@given(kappas, detunings, st.floats(0.0, 10.0), phases)
def test_optical_eigenvalues_closed_form(kappa, delta, chi, phi):
    p = LinearizedParams(gamma=1e-3, n_T=0.0, kappa_a=kappa, delta_a=delta, G_a=0.0, chi=chi, phi=phi)
    root = np.sqrt(complex(chi ** 2 - delta ** 2))
    expected = np.sort_complex(np.array([-kappa - root, -kappa + root]))
    assume(abs(root) > 1e-3)  # away from the exceptional point
    np.testing.assert_allclose(optical_eigs(p), expected, atol=1e-9 * (1 + kappa + abs(delta) + chi))


@given(kappas, detunings, st.floats(0.0, 1.0), ratios, phases, st.floats(0.1, 3.0))
def test_kernel_drift_matches_generic_builder(kappa, delta, G, R, phi, w):
    chi = R * math.hypot(kappa, delta)
    p = LinearizedParams(gamma=1e-2, n_T=3.0, kappa_a=kappa, delta_a=delta, G_a=G,
                         chi=chi, phi=phi, omega_m=w)
    sys = build_internal_system(p)
    A = _kernels.internal_drift(kappa, delta, G, chi, phi, 1e-2, w)
    D = _kernels.diffusion(kappa, 0.0, 0.0, 0.0, 1e-2, 3.0)
    np.testing.assert_allclose(sys.drift, A, atol=1e-13)
    np.testing.assert_allclose(sys.diffusion, D, atol=1e-13)


@given(kappas, detunings, st.floats(0.0, 1.0), st.floats(0.0, 5.0), phases)
def test_injected_diffusion_matches_kernel(kappa, delta, G, n_s, phi_s):
    q = InjectedModelParams(gamma=1e-2, n_T=3.0, kappa_a=kappa, delta_a_s=delta, G_a_s=G,
                            n_s=n_s, phi_s=phi_s)
    sys = build_injected_system(q)
    D = _kernels.diffusion(kappa, n_s, q.m_s, phi_s, 1e-2, 3.0)
    np.testing.assert_allclose(sys.diffusion, D, atol=1e-12 * (1 + n_s))
    assert np.linalg.eigvalsh(sys.diffusion).min() >= -1e-12 * np.abs(sys.diffusion).max()
    np.testing.assert_allclose(sys.diffusion, sys.diffusion.T, atol=0)


def test_vacuum_input_diffusion_is_isotropic():
    for phi_s in (0.0, 0.3, 2.0):
        q = InjectedModelParams(gamma=1e-2, n_T=3.0, kappa_a=1.7, delta_a_s=1.0, G_a_s=0.1,
                                phi_s=phi_s)
        np.testing.assert_allclose(build_injected_system(q).diffusion[:2, :2],
                                   2 * 1.7 * np.eye(2), atol=1e-15)


@given(kappas, detunings, st.floats(0.0, 1.0))
def test_models_coincide_without_squeezing(kappa, delta, G):
    p = LinearizedParams(gamma=1e-2, n_T=3.0, kappa_a=kappa, delta_a=delta, G_a=G)
    q = InjectedModelParams(gamma=1e-2, n_T=3.0, kappa_a=kappa, delta_a_s=delta, G_a_s=G)
    a, b = build_internal_system(p), build_injected_system(q)
    np.testing.assert_array_equal(a.drift, b.drift)
    np.testing.assert_array_equal(a.diffusion, b.diffusion)


def test_three_mode_system_layout():
    p = LinearizedParams(gamma=1e-3, n_T=1.0, kappa_a=1.0, delta_a=1.0, G_a=0.1, chi=0.5,
                         phi=0.3, kappa_c=5.0, delta_c=0.5, G_c=0.01, epsilon=0.2)
    sys = build_internal_system(p, include_pump=True)
    assert sys.drift.shape == (6, 6)
    assert sys.modes == ["a", "b", "c"]
    assert sys.index("c", "Y") == 5
    np.testing.assert_allclose(sys.diffusion[4:, 4:], 2 * 5.0 * np.eye(2))


# ---------------------------------------------------------------- stability

def test_stability_below_and_above_threshold():
    base = dict(gamma=1e-3, n_T=0.0, kappa_a=1.0, delta_a=1.0, G_a=0.0, phi=0.2)
    below = LinearizedParams(**base, chi=0.99 * math.sqrt(2))
    above = LinearizedParams(**base, chi=1.01 * math.sqrt(2))
    rep = stability(build_internal_system(below), below)
    assert rep.stable and rep.opo_threshold_ratio == pytest.approx(0.99)
    assert not stability(build_internal_system(above), above).stable


def test_fig1_optimum_is_stable(fig1):
    p = fig1.replace(chi=1.0, phi=math.pi / 2)
    rep = stability(build_internal_system(p), p)
    lam = np.linalg.eigvals(build_internal_system(p).drift).real.max()
    assert rep.stable and lam < 0
    assert opo_threshold_ratio(p) == pytest.approx(1 / math.sqrt(2))


@given(kappas, detunings, st.floats(0.0, 1.5), phases)
def test_threshold_ratio_decides_stability_without_coupling(kappa, delta, R, phi):
    assume(abs(R - 1.0) > 1e-3)
    p = LinearizedParams(gamma=1e-3, n_T=0.0, kappa_a=kappa, delta_a=delta, G_a=0.0,
                         chi=R * math.hypot(kappa, delta), phi=phi)
    assert stability(build_internal_system(p), p).stable == (R < 1)


@given(st.floats(0.05, 5.0), st.floats(-3, 3), st.floats(0.0, 0.5), ratios, phases)
def test_compiled_stability_test_agrees_with_eigenvalues(kappa, delta, G, R, phi):
    A = _kernels.internal_drift(kappa, delta, G, R * math.hypot(kappa, delta), phi, 1e-3, 1.0)
    lam = np.linalg.eigvals(A).real.max()
    assume(abs(lam - _kernels.STABILITY_MARGIN) > 1e-7)
    assert bool(_kernels.is_stable(A)) == (lam <= _kernels.STABILITY_MARGIN)


# ---------------------------------------------------------------- pump renormalisation

def test_renormalize_identity_without_coupling():
    p = LinearizedParams(gamma=1e-3, n_T=1.0, kappa_a=1.0, delta_a=1.0, G_a=0.1,
                         kappa_c=500.0, delta_c=1.0)
    assert renormalize_for_pump(p) == p


def test_renormalize_direct_values():
    p = LinearizedParams(gamma=1e-3, n_T=1.0, kappa_a=1.0, delta_a=1.0, G_a=0.1,
                         kappa_c=500.0, delta_c=0.0, epsilon=10.0)
    r = renormalize_for_pump(p)
    assert r.kappa_a == pytest.approx(0.8, rel=1e-14)
    assert r.delta_a == 1.0


def test_renormalize_rejects_overcompensation():
    p = LinearizedParams(gamma=1e-3, n_T=1.0, kappa_a=1.0, delta_a=1.0, G_a=0.1,
                         kappa_c=500.0, delta_c=0.0, epsilon=30.0)
    with pytest.raises(ValueError, match="renormalised"):
        renormalize_for_pump(p)


def _slow_poles(p):
    eig = np.linalg.eigvals(build_internal_system(p, include_pump=True).drift)
    slow = eig[(np.abs(eig.real) < 10.0) & (np.abs(np.abs(eig.imag) - p.delta_a) < 0.2)]
    return np.sort_complex(slow)


def test_renormalized_cavity_reproduces_effective_poles():
    # eliminating a fast pump mode must restore the requested (kappa_a, delta_a);
    # what is left is the next order, eps^2 |s| / |kappa_c + i delta_c|^2
    p = LinearizedParams(gamma=1e-3, n_T=1.0, kappa_a=1.0, delta_a=1.3, G_a=0.0,
                         kappa_c=200.0, delta_c=40.0, epsilon=5.0)
    target = np.array([-1.0 - 1.3j, -1.0 + 1.3j])
    next_order = p.epsilon ** 2 * abs(target[0]) / (p.kappa_c ** 2 + p.delta_c ** 2)
    np.testing.assert_allclose(_slow_poles(renormalize_for_pump(p)), target, atol=1.5 * next_order)
    assert np.abs(_slow_poles(p) - target).max() > 50 * next_order
