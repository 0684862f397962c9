import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sqzcool import (
    Axis,
    InjectedModelParams,
    LinearizedParams,
    Method,
    Model,
    SweepSpec,
    build_internal_system,
    evaluate_point,
    injected_optimum,
    internal_optimum,
    optimize_nst,
    phonon_number,
    run_sweep,
    steady_covariance,
)
from sqzcool.errors import ConfigError, NoStablePoint
from sqzcool.frame import external_photon_number
from sqzcool.sweep import R_MAX, RESULT_FIELDS, default_bounds, resolve, to_params


# ---------------------------------------------------------------- resolution

def test_defaults_are_the_fig1_point():
    r = resolve(Model.INTERNAL, {})
    assert (r["kappa_a"], r["delta_a"], r["G_a"], r["gamma"], r["n_T"]) == (1.0, 1.0, 0.1, 0.25e-6, 1000.0)
    assert r["chi"] == pytest.approx(1.0) and r["phi"] == pytest.approx(math.pi / 2)
    assert isinstance(to_params(Model.INTERNAL, r), LinearizedParams)


def test_ratio_sets_chi_and_is_clamped():
    r = resolve(Model.INTERNAL, {"R": 0.5, "delta_a": 2.0})
    assert r["chi"] == pytest.approx(0.5 * math.hypot(1.0, 2.0))
    r = resolve(Model.INTERNAL, {"R": 1.2})
    assert r["chi"] == pytest.approx(R_MAX * math.sqrt(2))


def test_none_model_has_no_squeezing():
    r = resolve(Model.NONE, {"chi": 0.5})
    assert r["chi"] == 0 and r["phi"] == 0


def test_injected_aliases_and_optimum():
    r = resolve(Model.INJECTED, {"delta_a": 1.0, "G_a": 0.2})
    phi_s, n_s, _ = injected_optimum(1.0, 1.0)
    assert r["delta_a_s"] == 1.0 and r["G_a_s"] == 0.2
    assert r["n_s"] == pytest.approx(n_s) and r["phi_s"] == pytest.approx(phi_s)
    r = resolve(Model.INJECTED, {"delta_a_s": 2.0, "delta_a": 1.0, "R_s": 0.3, "phi_s": 0.1})
    assert r["delta_a_s"] == 2.0
    assert r["n_s"] == pytest.approx(external_photon_number(0.3)) and r["phi_s"] == 0.1
    assert isinstance(to_params(Model.INJECTED, r), InjectedModelParams)


def test_injected_optimum_needs_positive_detuning():
    with pytest.raises(ValueError):
        resolve(Model.INJECTED, {"delta_a": -1.0})
    rec = evaluate_point(Model.INJECTED, {"delta_a": -1.0})
    assert rec.status == "invalid" and rec.n_st is None


def test_pump_couplings_from_single_photon_rates():
    r = resolve(Model.INTERNAL_FULL, {"chi_0": 1e-4, "g_a": 1e-6, "g_c": 1e-6})
    assert r["epsilon"] == pytest.approx(10.0)
    assert r["G_c"] == pytest.approx(0.01)
    with pytest.raises(ConfigError):
        resolve(Model.INTERNAL_FULL, {"chi_0": 1e-4, "g_a": 1e-6})


def test_unknown_and_malformed_values():
    with pytest.raises(ConfigError):
        resolve(Model.INTERNAL, {"foo": 1})
    with pytest.raises(ConfigError):
        resolve(Model.INTERNAL, {"kappa_a": "wide"})
    with pytest.raises(ConfigError):
        resolve(Model.INTERNAL, {"kappa_a": "opt"})
    with pytest.raises(ConfigError):
        resolve(Model.INTERNAL, {"G_a": math.inf})
    assert resolve(Model.INTERNAL, {"kappa_a": "2.5"})["kappa_a"] == 2.5


# ---------------------------------------------------------------- single points

def test_record_fields_and_status_last():
    rec = evaluate_point(Model.INTERNAL, {})
    row = rec.as_dict()
    assert list(row)[-1] == "status"
    assert set(RESULT_FIELDS) <= set(row)
    assert rec.status == "ok" and rec.stable
    assert rec.n_st_pert == pytest.approx(0.0125, abs=1e-5)
    assert rec.n_st == rec.n_st_lyap


def test_methods():
    pert = evaluate_point(Model.INTERNAL, {}, Method.PERT)
    lyap = evaluate_point(Model.INTERNAL, {}, Method.LYAP)
    assert pert.n_st_lyap is None and pert.n_st == pert.n_st_pert
    assert lyap.n_st_pert is None and lyap.a_plus is None and lyap.n_st_lyap > 0


def test_unstable_point():
    rec = evaluate_point(Model.INTERNAL, {"chi": 2.0, "phi": 0.0})
    assert rec.status == "unstable" and rec.stable is False and rec.n_st_lyap is None


def test_heating_point():
    rec = evaluate_point(Model.NONE, {"delta_a": -1.0, "G_a": 0.01, "gamma": 1.0})
    assert rec.stable and rec.status == "heating" and rec.gamma_opt < 0
    assert rec.n_st_pert is None and rec.n_st_lyap > 0


def test_full_model_uses_renormalized_cavity():
    vals = {"chi_0": 1e-4, "g_a": 1e-6, "g_c": 1e-6}
    rec = evaluate_point(Model.INTERNAL_FULL, vals)
    assert rec.status == "ok" and rec.resolved["epsilon"] == pytest.approx(10)
    # too much mode coupling to pre-compensate
    bad = evaluate_point(Model.INTERNAL_FULL, {"chi_0": 1e-3, "g_a": 1e-6, "g_c": 1e-6})
    assert bad.stable is False and "renormalised" in bad.message


@pytest.mark.parametrize("model", list(Model))
def test_no_negative_or_nan_results(model):
    rng = np.random.default_rng(5)
    for _ in range(40):
        vals = {"kappa_a": 10 ** rng.uniform(-1, 1), "delta_a": rng.uniform(-3, 3),
                "G_a": rng.uniform(0, 0.6), "R": rng.uniform(0, 1.2), "phi": rng.uniform(0, math.pi)}
        if model is Model.INTERNAL_FULL:
            vals.update(chi_0=1e-4, g_a=1e-6, g_c=1e-6)
        if model is Model.INJECTED:
            vals = {k: v for k, v in vals.items() if k != "R"}
            vals["n_s"] = rng.uniform(0, 3)
        rec = evaluate_point(model, vals)
        for name in ("n_st_pert", "n_st_lyap", "n_o"):
            x = getattr(rec, name)
            assert x is None or (math.isfinite(x) and x >= 0)
        assert rec.status in ("ok", "unstable", "heating", "not_converged", "invalid")


# ---------------------------------------------------------------- sweeps

def test_axis_validation():
    with pytest.raises(ConfigError):
        Axis("phi", 0, 1, 1)
    with pytest.raises(ConfigError):
        Axis("G_a", 0, 1, 5, "log")
    with pytest.raises(ConfigError):
        Axis("nope", 0, 1, 5)
    with pytest.raises(ConfigError):
        Axis("G_a", 0, math.inf, 5)
    np.testing.assert_allclose(Axis("G_a", 1e-3, 1, 4, "log").values(), [1e-3, 1e-2, 1e-1, 1])


def test_spec_validation():
    with pytest.raises(ConfigError):
        SweepSpec(Model.INTERNAL, ())
    with pytest.raises(ConfigError):
        SweepSpec(Model.INTERNAL, (Axis("phi", 0, 1, 2),) * 2)
    with pytest.raises(ConfigError):
        SweepSpec(Model.INTERNAL, (Axis("phi", 0, 1, 2),), minimize_over={"phi": (0, 1)})
    with pytest.raises(ConfigError):
        SweepSpec(Model.INTERNAL, (Axis("phi", 0, 1, 2),), minimize_over={"G_a": (1, 0)})
    with pytest.raises(ConfigError):
        SweepSpec(Model.INTERNAL, (Axis("phi", 0, 1, 2),), fixed={"bogus": 1})


def test_grid_is_row_major_and_complete():
    spec = SweepSpec(Model.NONE, (Axis("delta_a", 0.5, 1.5, 3), Axis("G_a", 0.01, 0.1, 4)))
    recs = run_sweep(spec)
    assert len(recs) == 12
    coords = [(r.coords["delta_a"], r.coords["G_a"]) for r in recs]
    assert coords == sorted(coords)
    assert [r.coords["G_a"] for r in recs[:4]] == list(np.linspace(0.01, 0.1, 4))


def test_threads_do_not_change_results():
    spec = SweepSpec(Model.INTERNAL, (Axis("phi", 0, math.pi, 17), Axis("R", 0.1, 0.9, 3)))
    one = [r.as_dict() for r in run_sweep(spec, threads=1)]
    many = [r.as_dict() for r in run_sweep(spec, threads=4)]
    assert one == many


def test_no_squeezing_baseline_at_large_linewidth():
    spec = SweepSpec(Model.NONE, (Axis("kappa_a", 10, 10.5, 2),), method=Method.PERT)
    rec = run_sweep(spec)[0]
    assert rec.n_o == pytest.approx(25.0, rel=1e-12)


def test_fig1_phase_sweep_minimum_sits_at_the_optimum():
    spec = SweepSpec(Model.INTERNAL, (Axis("phi", 0, math.pi, 101),), fixed={"chi": "opt"})
    recs = run_sweep(spec)
    best = min(recs, key=lambda r: math.inf if r.n_st_pert is None else r.n_st_pert)
    assert best.coords["phi"] == pytest.approx(math.pi / 2, abs=math.pi / 100)
    assert best.n_st_pert == pytest.approx(0.0125, abs=1e-5)
    lyap_best = min(recs, key=lambda r: math.inf if r.n_st_lyap is None else r.n_st_lyap)
    assert lyap_best.coords["phi"] == pytest.approx(math.pi / 2, abs=0.1)


@pytest.mark.xfail(strict=True, raises=AssertionError, reason=(
    "at G_a=0.1 the exact N_st is 0.0178 vs 0.0125 from the rates (30%); the gap is physical, "
    "see the master-equation test and the decisions ledger"))
def test_fig1_phase_sweep_lyapunov_within_five_percent():
    spec = SweepSpec(Model.INTERNAL, (Axis("phi", 0, math.pi, 101),), fixed={"chi": "opt"})
    best = min(run_sweep(spec), key=lambda r: math.inf if r.n_st_pert is None else r.n_st_pert)
    assert abs(best.n_st_pert - best.n_st_lyap) / best.n_st_lyap <= 0.05


@pytest.mark.xfail(strict=True, raises=AssertionError, reason=(
    "weak-coupling agreement within 5% does not hold up to G_a=0.1 near suppression; "
    "it holds for G_a <= 0.03 (next test); see the decisions ledger"))
def test_weak_coupling_records_within_five_percent_up_to_g_0p1():
    spec = SweepSpec(Model.INTERNAL, (Axis("G_a", 1e-3, 0.1, 12, "log"),), fixed={"chi": "opt"})
    for rec in run_sweep(spec):
        assert abs(rec.n_st_pert - rec.n_st_lyap) / rec.n_st_lyap <= 0.05


def test_weak_coupling_records_agree_for_small_g():
    spec = SweepSpec(Model.INTERNAL, (Axis("G_a", 1e-3, 0.03, 8, "log"), Axis("phi", 1.2, 1.9, 5)),
                     fixed={"chi": "opt"})
    for rec in run_sweep(spec):
        assert rec.status == "ok"
        assert abs(rec.n_st_pert - rec.n_st_lyap) / rec.n_st_lyap <= 0.05


# ---------------------------------------------------------------- optimisation

def test_optimum_beats_dense_grid():
    fixed = {"G_a": 0.05}
    rec = optimize_nst(Model.NONE, fixed, {"delta_a": (0.2, 3.0)}, method=Method.LYAP)
    grid = [evaluate_point(Model.NONE, {**fixed, "delta_a": d}, Method.LYAP).n_st_lyap
            for d in np.linspace(0.2, 3.0, 281)]
    assert rec.n_st_lyap <= min(grid) * (1 + 1e-9)
    assert rec.resolved["opt_delta_a"] == rec.resolved["delta_a"]


def test_optimum_is_reproducible():
    b = {"delta_a": (0.2, 3.0, "log"), "G_a": (0.01, 0.3, "log")}
    r1 = optimize_nst(Model.INTERNAL, {}, b, seed=3, starts=4)
    r2 = optimize_nst(Model.INTERNAL, {}, b, seed=3, starts=4)
    assert r1.as_dict() == r2.as_dict()


def test_no_stable_point_raises():
    with pytest.raises(NoStablePoint):
        optimize_nst(Model.INTERNAL, {"chi": 10.0, "phi": 0.0}, {"delta_a": (0.1, 1.0)}, starts=3)


def test_bad_bounds():
    with pytest.raises(ConfigError):
        optimize_nst(Model.INTERNAL, {}, {})
    with pytest.raises(ConfigError):
        optimize_nst(Model.INTERNAL, {}, {"G_a": (0.0, 1.0, "log")})


def test_minimize_over_inside_sweep():
    spec = SweepSpec(Model.NONE, (Axis("kappa_a", 0.5, 2.0, 2),), method=Method.LYAP,
                     minimize_over={"delta_a": (0.1, 5.0, "log")}, starts=3)
    recs = run_sweep(spec)
    assert [r.coords for r in recs] == [{"kappa_a": 0.5}, {"kappa_a": 2.0}]
    assert all("opt_delta_a" in r.resolved for r in recs)


def test_small_linewidth_gains_little_from_squeezing():
    fixed = {"kappa_a": 0.1}
    sq = optimize_nst(Model.INTERNAL, fixed, default_bounds(Model.INTERNAL, fixed), method=Method.LYAP)
    plain = optimize_nst(Model.NONE, fixed, default_bounds(Model.NONE, fixed), method=Method.LYAP)
    assert sq.n_st_lyap <= plain.n_st_lyap
    assert plain.n_st_lyap / sq.n_st_lyap < 2.0


@given(st.floats(0.05, 5), st.floats(0.3, 3), st.floats(0.01, 0.3), st.floats(0.0, 0.95),
       st.floats(0, math.pi))
def test_compiled_objective_matches_reference_solver(kappa, delta, G, R, phi):
    from sqzcool.sweep import _fast_log_nst
    vals = {"kappa_a": kappa, "delta_a": delta, "G_a": G, "R": R, "phi": phi, "gamma": 1e-3, "n_T": 10.0}
    fast = _fast_log_nst(Model.INTERNAL, vals)
    p = to_params(Model.INTERNAL, resolve(Model.INTERNAL, vals))
    sys = build_internal_system(p)
    if np.linalg.eigvals(sys.drift).real.max() > -1e-6:
        return
    ref = phonon_number(steady_covariance(sys))
    assert math.exp(fast) == pytest.approx(ref, rel=1e-8)


def test_default_bounds_cover_the_optimum():
    b = default_bounds(Model.INTERNAL, {"kappa_a": 10.0})
    assert b["delta_a"][1] >= 100 and b["R"][1] <= R_MAX
    assert set(default_bounds(Model.INJECTED, {})) == {"phi_s", "R_s", "delta_a_s", "G_a_s"}
    assert set(default_bounds(Model.NONE, {})) == {"delta_a", "G_a"}
    _, chi, _ = internal_optimum(1.0, 1.0)
    assert chi == pytest.approx(1.0)
