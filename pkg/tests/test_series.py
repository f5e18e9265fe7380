import math

import numpy as np
import pytest

from singscat import DomainError, MatchingError, NotAsymptoticError, Region, free_solution
from singscat import localwave as L
from singscat import oracle as O
from singscat import series as S
from singscat.freewaves import wrap_phase

from .conftest import unit_solution


@pytest.fixture(scope="module")
def eee5():
    return unit_solution("EEE", 5.0)


@pytest.fixture(scope="module")
def eee5_series(eee5):
    return S.solve_series(eee5, (2, 2))


@pytest.fixture(scope="module")
def eee5_converged(eee5):
    return S.solve_series(eee5, (30, 30))


@pytest.fixture(scope="module")
def eee5_oracle(eee5):
    return O.phase_shift_oracle(eee5, return_solution=True)


def test_leading_term_at_matching_point():
    sol = unit_solution("EEE", 2.0)
    a = 32**0.25
    for sign in (+1, -1):
        sg, logmag = S.leading_term(Region.EPS, sign, sol, 1.0)
        assert sg == 1.0 and math.exp(logmag) == pytest.approx(a, rel=1e-14)
    assert S.leading_term(Region.TAU, +1, sol, 1.0, 1.0, 0.0) == pytest.approx(2.37841, abs=5e-6)


def test_leading_term_decays_into_core():
    sol = unit_solution("EEE", 2.0)
    t = np.linspace(0.2, 1.0, 30)
    logs = [S.leading_term(Region.EPS, +1, sol, x)[1] for x in t]
    assert np.all(np.diff(logs) > 0)


def test_leading_term_needs_positive_k_squared():
    with pytest.raises(DomainError):
        S.leading_term(Region.EPS, +1, free_solution(1.0, 0, 2.0), 0.9)


@pytest.mark.parametrize("t", [0.35, 0.5, 0.65, 0.8, 0.95])
def test_eps_wronskian(t):
    sol = unit_solution("EEE", 2.0)
    assert S.wronskian_check(Region.EPS, sol, t=t) == pytest.approx(-4.0, rel=1e-8)


def test_eps_wronskian_constancy():
    sol = unit_solution("PPP", 10.0)
    w = [S.wronskian_check(Region.EPS, sol, t=t) for t in (0.5, 0.9)]
    assert w[0] == pytest.approx(w[1], rel=1e-8)


def test_tau_wronskian():
    sol = unit_solution("EEE", 2.0)
    # kR times d_tau = C⁺S⁻ - C⁻S⁺ = 1
    for t in (1.2, 1.5, 2.5):
        assert S.wronskian_check(Region.TAU, sol, (1.0, 0.0, 0.0, 1.0), t=t) == pytest.approx(2.0, rel=1e-8)
    assert S.wronskian_check(Region.TAU, sol, (0.3, 0.7, 1.0, 1.0), t=1.5) == pytest.approx(2.0 * (0.3 - 0.7), rel=1e-8)


def test_free_tau_iterate_vanishes():
    sol = free_solution(1.0, 0, 2.0)
    grid = S.build_grid(Region.TAU, sol, t_end=20.0)
    terms = S.series_terms(grid, 2, coeffs=S.MatchCoefficients(0.4, 0.9))
    assert terms[1].sup_norm(grid) == 0.0 and terms[2].sup_norm(grid) == 0.0


def test_first_iterate_bounded_by_convergence_integral(eee5):
    grid = S.build_grid(Region.EPS, eee5)
    w = S.series_terms(grid, 1)
    assert w[1].sup_norm(grid) / w[0].sup_norm(grid) <= L.convergence_integral(Region.EPS, eee5, 1.0)


@pytest.mark.xfail(strict=True, reason="the first-iterate ratio grows with R (1.13, 1.43, 1.73 at R = 5, 10, 20)")
def test_first_iterate_ratio_decreases_with_R():
    ratios = []
    for R in (5.0, 10.0, 20.0):
        grid = S.build_grid(Region.EPS, unit_solution("EEE", R))
        w = S.series_terms(grid, 1)
        ratios.append(w[1].sup_norm(grid) / w[0].sup_norm(grid))
    assert ratios[0] > ratios[1] > ratios[2]


def test_order_zero_exact_on_grid(eee5):
    grid = S.build_grid(Region.EPS, eee5)
    w0 = S.order_zero(grid)
    i = len(grid.t) // 2
    sg, logmag = S.leading_term(Region.EPS, +1, eee5, grid.t[i])
    assert w0.values(grid)[i] == pytest.approx(sg * math.exp(logmag), rel=1e-8)


def test_term_norms_decay(eee5_converged):
    for key in ("eps_norms", "tau_norms"):
        norms = eee5_converged.diagnostics[key]
        assert all(np.isfinite(norms))
        assert all(b < a for a, b in zip(norms[2:-1], norms[3:]))


def test_moments_match_quadrature():
    from scipy.integrate import quad

    for x in (0.0, 0.2, 3.0, 40.0):
        m = S._moments(x)
        for j in range(3):
            ref, _ = quad(lambda s: s**j * math.exp(-x * (1 - s)), 0, 1, epsabs=1e-15, epsrel=1e-13)
            assert m[j] == pytest.approx(ref, rel=1e-12)


def test_matching_is_linear_in_normalisation(eee5):
    gt = S.build_grid(Region.TAU, eee5)
    a = S.solve_matching(0.7, -1.3, gt, (2, 2))
    b = S.solve_matching(0.7 * 3.5, -1.3 * 3.5, gt, (2, 2))
    assert b.c_plus == pytest.approx(3.5 * a.c_plus, rel=1e-13)
    assert b.s_plus == pytest.approx(3.5 * a.s_plus, rel=1e-13)
    c = a.scaled(3.5)
    assert (c.c_plus, c.s_plus) == pytest.approx((b.c_plus, b.s_plus), rel=1e-13)


def test_matching_cos_sin_columns():
    # order 0 with a pure oscillator: value and slope fix (C, S) directly
    sol = free_solution(1.0, 0, 4.0)
    gt = S.build_grid(Region.TAU, sol, t_end=5.0)
    co = S.solve_matching(2.0, 0.0, gt, (0, 0))
    assert co.c_plus == pytest.approx(2.0 / math.exp(gt.log_a[0]), rel=1e-12)
    assert co.s_plus == pytest.approx(0.0, abs=1e-14)


def test_auxiliary_pair_must_be_independent():
    with pytest.raises(MatchingError):
        S.MatchCoefficients(1.0, 2.0, 2.0, 4.0)


def test_continuity_at_matching_point(eee5_series):
    d = eee5_series.diagnostics
    t, u, du = eee5_series.samples()
    i = int(np.argmin(np.abs(t - 1.0)))
    assert d["match_value"] <= 1e-10 * abs(u[i])
    assert d["match_slope"] <= 1e-10 * max(abs(du[i]), 1.0)


def test_regularity_at_core(eee5_series, eee5):
    _, log_u = eee5_series.log_wave_eps()
    assert log_u[0] < log_u[-1] - 10
    exponent = S.phase_integral(Region.EPS, eee5, eee5_series.eps_grid.t[0])
    assert log_u[0] - log_u[-1] <= exponent + 10


def test_phase_shift_needs_asymptotic_point(eee5):
    with pytest.raises(NotAsymptoticError):
        S.solve_series(eee5, (0, 0), t_far=1.2)


def test_cutoff_must_be_nonnegative(eee5):
    with pytest.raises(DomainError):
        S.solve_series(eee5, (-1, 0))


@pytest.mark.parametrize("aux", [(1.0, 1.0), (0.5, -2.0)])
def test_auxiliary_pair_invariance(eee5, eee5_series, aux):
    other = S.solve_series(eee5, (2, 2), aux=aux)
    assert abs(wrap_phase(other.phase_shift - eee5_series.phase_shift)) <= 1e-10


def test_converged_series_matches_oracle(eee5_converged, eee5_oracle):
    delta, branch, _ = eee5_oracle
    assert abs(wrap_phase(eee5_converged.phase_shift - delta)) <= 1e-4
    assert eee5_converged.branch == branch


def test_converged_wavefunction_matches_oracle(eee5, eee5_converged, eee5_oracle):
    osol = eee5_oracle[2]
    t = np.linspace(0.8, 3.0, 301)
    ref = O.integrate_regular(eee5, r_eval=eee5.R * np.append(t, 1.0))
    keep = (ref.r > 0.8 * eee5.R - 1e-9) & (ref.r < 3.0 * eee5.R + 1e-9)
    tt = ref.r[keep] / eee5.R
    i = int(np.argmin(np.abs(tt - 1.0)))
    dev = S.normalized_deviation(S.wavefunction(eee5_converged, tt), ref.u[keep], i)
    assert dev <= 1e-3
    assert osol.r_start < eee5.R < osol.r_max


@pytest.mark.xfail(strict=True, reason="the (2,2) partial sum is far from converged at R = 5, see the decisions ledger")
def test_cutoff_2_2_matches_oracle(eee5_series, eee5_oracle):
    assert abs(wrap_phase(eee5_series.phase_shift - eee5_oracle[0])) <= 1e-2


def test_schrodinger_residual_drops_with_cutoff(eee5, eee5_converged):
    r0 = S.schrodinger_residual(S.solve_series(eee5, (0, 0)))
    r2 = S.schrodinger_residual(S.solve_series(eee5, (2, 2)))
    assert r2 < r0
    assert S.schrodinger_residual(eee5_converged) < 2e-3


def test_wavefunction_derivative_matches_samples(eee5_converged):
    t = np.array([0.7, 0.95, 1.05, 2.0])
    du = S.wavefunction(eee5_converged, t, derivative=True)
    h = 1e-5
    fd = (S.wavefunction(eee5_converged, t + h) - S.wavefunction(eee5_converged, t - h)) / (2 * h)
    assert np.allclose(du, fd, rtol=1e-5)


def test_leading_deviation_metric(eee5):
    full = S.solve_series(eee5, (2, 2))
    assert S.leading_deviation(eee5, full=full, lead=full) == 0.0
    assert S.leading_deviation(eee5, full=full) > 0


@pytest.mark.parametrize("tag", ["EEE", "EEP", "EPE", "EPP", "PEE", "PEP", "PPE", "PPP"])
@pytest.mark.parametrize("l", [0, 1])
@pytest.mark.parametrize("R", [5.0, 10.0])
def test_residual_decreases_from_leading_term(tag, l, R):
    sol = unit_solution(tag, R, l)
    r0 = S.schrodinger_residual(S.solve_series(sol, (0, 0)))
    r2 = S.schrodinger_residual(S.solve_series(sol, (2, 2)))
    assert r2 < r0
