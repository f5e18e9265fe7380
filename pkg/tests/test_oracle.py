import math
from dataclasses import replace

import numpy as np
import pytest

from singscat import DomainError, free_solution
from singscat import oracle as O
from singscat.freewaves import riccati_jn, wrap_phase

from .conftest import unit_solution

# δ0 and branch for EEE, unit parameters, k = 1, first computed by this oracle
GOLDENS = {
    3.0: (0.5297099093177726, -1),
    5.0: (-1.4478760687676346, -1),
    8.0: (-1.293358448118098, -2),
}


@pytest.fixture(scope="module")
def runs():
    return {R: O.phase_shift_oracle(unit_solution("EEE", R)) for R in GOLDENS}


def test_config_validation():
    with pytest.raises(DomainError):
        O.OracleConfig(rtol=0.0)
    with pytest.raises(DomainError):
        O.OracleConfig(method="euler")
    with pytest.raises(DomainError):
        O.OracleConfig(switch_fraction=1.5)
    with pytest.raises(DomainError):
        O.OracleConfig(start_multiple=2.0)


@pytest.mark.parametrize("l", [0, 1])
@pytest.mark.parametrize("method", ["DOP853", "numerov"])
def test_free_solution(l, method):
    sol = free_solution(1.0, l, 3.0)
    cfg = O.OracleConfig(method=method)
    osol = O.integrate_regular(sol, cfg)
    ref = riccati_jn(l, osol.r)[0]
    i = len(osol.r) // 2
    scale = ref[i] / osol.u[i]
    tol = 1e-8 if method == "DOP853" else 1e-6
    assert np.max(np.abs(osol.u * scale - ref)) <= tol * np.max(np.abs(ref))
    assert O.phase_shift_oracle(sol, cfg)[0] == pytest.approx(0.0, abs=tol)


@pytest.mark.parametrize("rw", [0.7, 2.3, 5.0])
def test_hard_wall(rw):
    osol = O.integrate_hard_wall(1.0, 0, rw)
    delta = O.phase_from_solution(1.0, 0, osol)
    assert abs(wrap_phase(delta + rw)) <= 1e-8


@pytest.mark.parametrize("R", sorted(GOLDENS))
def test_goldens(runs, R):
    delta, branch = runs[R]
    assert delta == pytest.approx(GOLDENS[R][0], abs=1e-8)
    assert branch == GOLDENS[R][1]


def test_continuous_phase_decreases(runs):
    cont = [runs[R][0] + runs[R][1] * math.pi for R in sorted(GOLDENS)]
    assert cont[0] > cont[1] > cont[2]


def test_tolerance_halving(runs):
    sol = unit_solution("EEE", 5.0)
    cfg = O.with_tolerance(O.OracleConfig(), 0.5)
    assert abs(wrap_phase(O.phase_shift_oracle(sol, cfg)[0] - runs[5.0][0])) < 1e-6


def test_start_depth_insensitivity(runs):
    sol = unit_solution("EEE", 5.0)
    cfg = O.OracleConfig()
    r0 = O.start_radius(sol, cfg)
    deeper = replace(cfg, start_multiple=0.5 * r0 / sol.R)
    assert abs(wrap_phase(O.phase_shift_oracle(sol, deeper)[0] - runs[5.0][0])) < 1e-8


def test_numerov_agrees_with_dop853(runs):
    sol = unit_solution("EEE", 5.0)
    d, b = O.phase_shift_oracle(sol, O.OracleConfig(method="numerov"))
    assert abs(wrap_phase(d - runs[5.0][0])) < 1e-5 and b == runs[5.0][1]


def test_wronskian_constancy():
    sol = unit_solution("PPP", 5.0)
    cfg = O.OracleConfig()
    r0 = O.start_radius(sol, cfg)
    r_sw = O.switch_radius(sol, cfg, r0)
    r_max = O.outer_radius(sol, cfg)
    pts = np.linspace(r_sw, r_max, 50)
    _, u1, du1 = O._direct_phase(sol, cfg, r_sw, r_max, 1.0, 0.3, pts)
    _, u2, du2 = O._direct_phase(sol, cfg, r_sw, r_max, -0.2, 2.0, pts)
    w = u1 * du2 - u2 * du1
    assert np.max(np.abs(w / w[0] - 1)) <= 1e-8


def test_solution_layout():
    sol = unit_solution("EEE", 5.0)
    osol = O.integrate_regular(sol)
    assert osol.r_start < sol.R < osol.r_max
    assert np.all(np.diff(osol.r) > 0)
    i = int(np.argmin(np.abs(osol.r - osol.r_switch)))
    assert osol.u[i] == pytest.approx(1.0)
    assert np.all(np.isfinite(osol.log_u))
    assert osol.r_max >= 20.0
    assert len(osol.rows()[0]) == 3


def test_outer_radius_reaches_negligible_potential():
    sol = unit_solution("PPP", 8.0)
    r = O.outer_radius(sol, O.OracleConfig())
    assert O._log_veff(sol, r) < math.log(1e-10)
