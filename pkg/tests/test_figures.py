import json
import math

import pytest

from sqzcool import reproduce_figure
from sqzcool.errors import ConfigError
from sqzcool.figures import FAILED_STATUSES, Panel, blob_sha1, csv_text

COARSE_2D = {"phi_points": 8, "r_points": 6, "cut_points": 6, "starts": 3}


def panel(result, name):
    return next(p for p in result.panels if p.name == name)


def finite_min(rows, key="n_st_lyap"):
    return min((r for r in rows if r[key] is not None), key=lambda r: r[key])


@pytest.fixture(scope="module")
def fig1(tmp_path_factory):
    out = tmp_path_factory.mktemp("fig1")
    return reproduce_figure(1, out_dir=out), out


def test_fig1_panels_and_files(fig1):
    res, out = fig1
    assert [p.name for p in res.panels] == ["a", "b", "c", "d"]
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["figure"] == 1 and manifest["partial_panels"] == []
    for name, info in manifest["panels"].items():
        data = (out / info["file"]).read_bytes()
        assert blob_sha1(data) == info["sha1"]
        header = data.decode().splitlines()[0].split(",")
        assert header[-1] == "status" and header == info["columns"]
        assert info["rows"] == len(data.decode().splitlines()) - 1


def test_fig1_spectrum_dip(fig1):
    res, _ = fig1
    rows = [r for r in panel(res, "a").rows if r["series"] == "internal"]
    at = {round(r["omega"], 12): r["S_a"] for r in rows}
    assert at[-1.0] <= 1e-12
    assert at[1.0] > 1.0
    plain = {round(r["omega"], 12): r["S_a"] for r in panel(res, "a").rows if r["series"] == "none"}
    assert plain[-1.0] == pytest.approx(0.4, rel=1e-12)


def test_fig1_minima(fig1):
    res, _ = fig1
    b = [r for r in panel(res, "b").rows if r["series"] == "internal"]
    best = finite_min(b, "n_st_pert")
    assert best["phi"] == pytest.approx(math.pi / 2, abs=0.04)
    c = [r for r in panel(res, "c").rows if r["series"] == "internal"]
    assert finite_min(c, "n_st_pert")["R"] == pytest.approx(1 / math.sqrt(2), abs=0.02)


def test_fig1_large_coupling_deviation_grows(fig1):
    res, _ = fig1
    rows = [r for r in panel(res, "d").rows if r["series"] == "internal" and r["status"] == "ok"
            and r["G_a"] >= 0.3]
    dev = [abs(r["n_st_lyap"] - r["n_st_pert"]) / r["n_st_lyap"] for r in rows]
    assert len(dev) >= 3
    assert all(b > a for a, b in zip(dev, dev[1:]))


def test_csv_number_format():
    p = Panel("x", [{"a": 1 / 3, "b": None, "ok": True, "n": 3, "status": "ok"}])
    text = csv_text(p)
    assert text.splitlines() == ["a,b,ok,n,status", "0.33333333333333331,,true,3,ok"]


def test_partial_panels_are_flagged(tmp_path):
    p = Panel("x", [{"a": 1.0, "status": "ok"}, {"a": None, "status": "not_converged"}])
    assert p.partial and "not_converged" in FAILED_STATUSES
    assert not Panel("y", [{"a": 1.0, "status": "unstable"}]).partial


def test_fig2_rows_and_notes():
    res = reproduce_figure(2, {"points": 9, "starts": 3})
    assert {p.name.split("_")[0] for p in res.panels} == {"row1", "row2", "row3"}
    notes = res.manifest["notes"]
    assert set(notes) == {"row1", "row2", "row3"}
    for row in ("row1", "row2", "row3"):
        phis = [r["phi"] for r in panel(res, f"{row}_phi").rows if r["series"] == "internal"]
        assert phis == sorted(phis) and len(phis) == 9
        opt = notes[row]["row_optimum"]
        assert set(opt) == {"internal", "injected", "none"}


def test_fig3_has_two_temperature_rows():
    res = reproduce_figure(3, {"points": 7, "starts": 3})
    assert {p.name.split("_")[0] for p in res.panels} == {"row1", "row2"}
    notes = res.manifest["notes"]
    assert notes["row1"]["n_T"] < notes["row2"]["n_T"]
    # hotter bath needs stronger optimal coupling
    for model in ("internal", "injected"):
        assert notes["row2"]["row_optimum"][model]["G_a"] > notes["row1"]["row_optimum"][model]["G_a"]


def test_fig4_minimum_near_threshold():
    res = reproduce_figure(4, COARSE_2D)
    cuts = res.manifest["notes"]["cuts"]
    assert cuts["internal"]["optimum"]["R"] >= 0.9
    assert cuts["internal"]["optimum_n_st"] < 1.0
    assert finite_min(panel(res, "a").rows)["R"] >= 0.9
    for model in ("internal", "injected"):
        c = cuts[model]
        assert c["discrepancy_over_pi"] == pytest.approx(c["phase_over_pi"] - c["quoted_phase_over_pi"])


def test_fig6_full_model_columns():
    res = reproduce_figure(6, {"points": 7})
    rows = [r for r in panel(res, "b").rows if r["series"] == "full"]
    for r in rows:
        assert r["mf_G_c"] == pytest.approx(r["G_c"], rel=1e-8)
        assert r["mf_epsilon"] == pytest.approx(r["epsilon"], rel=1e-8)
    ok = [r for r in rows if r["status"] == "ok"]
    dev = [abs(r["n_st_lyap"] / res.manifest["notes"]["reduced_n_st_lyap"] - 1) for r in ok]
    assert min(dev) < 0.02 and max(dev) > 0.1


def test_bad_figure_requests():
    with pytest.raises(ConfigError):
        reproduce_figure(7)
    with pytest.raises(ConfigError):
        reproduce_figure(1, {"points": 1})
    with pytest.raises(ConfigError):
        reproduce_figure(1, {"bogus": 1})
