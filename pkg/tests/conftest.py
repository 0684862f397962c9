"""Shared fixtures and the acceptance summary printed at the end of a run."""
import re

import pytest
from hypothesis import HealthCheck, settings

from sqzcool import InjectedModelParams, LinearizedParams

settings.register_profile(
    "sqzcool", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("sqzcool")

# single-point parameters of the first figure
FIG1 = dict(gamma=0.25e-6, n_T=1000.0, kappa_a=1.0, delta_a=1.0, G_a=0.1)

ACCEPTANCE_TITLES = {
    1: "Stokes suppression zero at the internal optimum",
    2: "perturbative rates and N_st against Lorentzian oracles",
    3: "perturbative vs Lyapunov agreement and large-G deviation",
    4: "internal/injected equivalence on a 125-point grid",
    5: "unresolved-sideband cooling claims",
    6: "pump-corrected model against the reduced model",
    7: "analytic vs transfer-function spectra",
    8: "squeezed-variance law 1/(1+R)",
    9: "byte-identical figure output",
}
_acceptance = {}


@pytest.fixture
def fig1():
    return LinearizedParams(**FIG1)


@pytest.fixture
def fig1_injected():
    return InjectedModelParams(gamma=FIG1["gamma"], n_T=FIG1["n_T"], kappa_a=1.0,
                               delta_a_s=1.0, G_a_s=0.1)


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)", report.nodeid)
    if not m:
        return
    k = int(m.group(1))
    if report.when == "call" or report.failed:
        _acceptance[k] = _acceptance.get(k, True) and report.passed


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_acceptance):
        verdict = "PASS" if _acceptance[k] else "FAIL"
        terminalreporter.write_line(f"criterion {k}: {verdict}  {ACCEPTANCE_TITLES.get(k, '')}")
