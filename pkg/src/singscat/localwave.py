"""
Local wave numbers, residual potentials and discriminants on the two regions.

With t = r/R the exponential region is t < 1 and the trigonometric region
t > 1.  The local wave number squares are

    K_eps²(t) = -(k² - g²U(s; Rt) - λ_eps²/(R²t²))
    K_tau²(t) = +(k² - g²U(s; Rt) - λ_tau²/(R²t²))

and both equal 1/(8R²) at t = 1 on the Master surface.  The potential is
anchored at its Master-equation value, g²U(s; Rt) = g²U(s; R) exp(ln ratio),
so that the cancellation at t = 1 is exact and huge core values are
handled as scaled quantities ``q = exp(M) * qs``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from . import potentials
from .errors import DomainError, QuadratureError

UNDERFLOW_LOG = -745.0


class Region(enum.Enum):
    EPS = "epsilon"
    TAU = "tau"

    @property
    def sign(self):
        # overall sign in front of the brace
        return -1.0 if self is Region.EPS else 1.0


def as_region(region):
    if isinstance(region, Region):
        return region
    key = str(region).lower()
    if key in ("eps", "epsilon", "e"):
        return Region.EPS
    if key in ("tau", "t"):
        return Region.TAU
    raise DomainError(f"unknown region {region!r}")


def region_lambda_sq(region, triad):
    return triad.lambda_eps_sq if as_region(region) is Region.EPS else triad.lambda_tau_sq


def _check_t(t):
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0)):
        raise DomainError("t must be positive")
    return t


def scaled_k_squared(region, sol, t):
    """Scaled K², dK²/dt and d²K²/dt².

    Returns ``(M, q, dq, d2q)`` with the true values equal to
    ``exp(M) * q`` etc.  ``M`` is the log of the potential term where that
    exceeds one, and zero otherwise.
    """
    region = as_region(region)
    t = _check_t(t)
    R = sol.R
    lam = region_lambda_sq(region, sol.triad)
    sig = region.sign
    if sol.cls is None:
        lnV = np.full_like(t, -np.inf)
        delta = np.zeros_like(t)
        d1 = d2 = np.zeros_like(t)
    else:
        delta = potentials.log_potential_ratio(sol.cls, sol.s, R, t)
        lnV = math.log(sol.potential_at_R) + delta
        d1, d2 = potentials.log_potential_derivatives(sol.cls, sol.s, R * t)
    M = np.maximum(lnV, 0.0)
    big = lnV > 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        # V(Rt) - V(R), scaled by exp(-M)
        dv = np.where(big, -np.expm1(-delta), sol.potential_at_R * np.expm1(np.where(big, 0.0, delta)))
        vs = np.exp(lnV - M)
        em = np.exp(-M)
        cent = lam / (R * R * t * t)
        q = sig * ((sol.gap - cent) * em - dv)
        dq = sig * (2.0 * cent / t * em - R * vs * d1)
        d2q = sig * (-6.0 * cent / (t * t) * em - R * R * vs * (d1 * d1 + d2))
    return M, q, dq, d2q


def k_squared(region, sol, t):
    """K_γ²(t) in 1/length²; ``inf`` where the core term overflows."""
    M, q, _, _ = scaled_k_squared(region, sol, t)
    with np.errstate(over="ignore"):
        out = np.exp(M) * q
    return out if np.ndim(out) else float(out)


def log_k_squared(region, sol, t):
    """ln K_γ²(t); NaN where K² <= 0."""
    M, q, _, _ = scaled_k_squared(region, sol, t)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = M + np.log(np.where(q > 0, q, np.nan))
    return out if np.ndim(out) else float(out)


def k_squared_derivatives(region, sol, t):
    """Analytic (dK²/dt, d²K²/dt²)."""
    M, _, dq, d2q = scaled_k_squared(region, sol, t)
    with np.errstate(over="ignore"):
        a, b = np.exp(M) * dq, np.exp(M) * d2q
    if np.ndim(a):
        return a, b
    return float(a), float(b)


def log_derivative_ratios(region, sol, t):
    """(K²'/K², K²''/K²), finite even where K² itself overflows."""
    _, q, dq, d2q = scaled_k_squared(region, sol, t)
    if np.any(q == 0):
        raise DomainError("K² vanishes: residual potential is singular here")
    return dq / q, d2q / q


def residual_delta(region, sol, t):
    """Residual potential Δ_γ(t).

    The centrifugal mismatch λ_γ² - l(l+1) is 1/4 in the exponential
    region and zero in the trigonometric one.
    """
    region = as_region(region)
    t = _check_t(t)
    a, b = log_derivative_ratios(region, sol, t)
    mismatch = region_lambda_sq(region, sol.triad) - sol.l * (sol.l + 1)
    out = -(5.0 / 16.0) * a * a + 0.25 * b - mismatch / (t * t)
    return out if np.ndim(out) else float(out)


def log_abs_discriminant(region, sol, t):
    """(sign, ln|p_γ(t)|) with p_γ = Δ_γ / (R K_γ)."""
    M, q, _, _ = scaled_k_squared(region, sol, t)
    if np.any(~(q > 0)):
        raise DomainError("discriminant needs K² > 0")
    d = np.asarray(residual_delta(region, sol, t))
    with np.errstate(divide="ignore"):
        logp = np.log(np.abs(d)) - math.log(sol.R) - 0.5 * (M + np.log(q))
    return np.sign(d), logp


def discriminant(region, sol, t):
    """p_γ(t) = Δ_γ(t) / (R K_γ(t)), with K_γ the positive root."""
    sgn, logp = log_abs_discriminant(region, sol, t)
    out = sgn * np.exp(logp)
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class LocalWaveProfile:
    region: Region
    t: np.ndarray
    k2: np.ndarray
    dk2: np.ndarray
    d2k2: np.ndarray
    delta: np.ndarray
    p: np.ndarray
    P_value: float

    def rows(self):
        """CSV rows (t, K², Δ, p)."""
        return [(float(a), float(b), float(c), float(d)) for a, b, c, d in zip(self.t, self.k2, self.delta, self.p)]


def profile(region, sol, t):
    """Sample the local-wave quantities on ``t`` and attach P_γ at its end."""
    region = as_region(region)
    t = np.asarray(t, dtype=float)
    k2 = np.asarray(k_squared(region, sol, t))
    dk2, d2k2 = k_squared_derivatives(region, sol, t)
    end = float(t.max()) if region is Region.EPS else float(t.max())
    end = min(end, 1.0) if region is Region.EPS else max(end, 1.0)
    return LocalWaveProfile(
        region, t, k2, np.asarray(dk2), np.asarray(d2k2),
        np.asarray(residual_delta(region, sol, t)), np.asarray(discriminant(region, sol, t)),
        convergence_integral(region, sol, end),
    )


@dataclass(frozen=True)
class ConvergenceIntegral:
    value: float
    error: float
    t_min: float
    truncation: float


def _log_integrand(region, sol, t):
    with np.errstate(all="ignore"):
        _, lp = log_abs_discriminant(region, sol, np.array([t]))
    return float(lp[0]) + math.log(sol.R)


def _integrand(region, sol):
    logR = math.log(sol.R)

    def f(t):
        _, lp = log_abs_discriminant(region, sol, np.array([t]))
        v = lp[0] + logR
        return math.exp(v) if v > UNDERFLOW_LOG else 0.0

    return f


def _matching_scale(region, sol):
    """Width over which K² doubles from its value at t = 1."""
    _, q, dq, _ = scaled_k_squared(region, sol, np.array([1.0]))
    return abs(q[0] / dq[0]) if dq[0] != 0 else 1.0


def _eps_cutoff(sol):
    """Largest t below which R|p_eps| sits under the double underflow."""
    logR = math.log(sol.R)

    def g(t):
        _, lp = log_abs_discriminant(Region.EPS, sol, np.array([t]))
        return lp[0] + logR

    hi = 0.5
    lo = hi
    while True:
        lo = lo * 0.5
        if lo < 1e-300:
            raise QuadratureError("exponential-region discriminant does not vanish at the origin", bracket=(0.0, hi))
        with np.errstate(all="ignore"):
            v = g(lo)
        if not np.isfinite(v) or v < UNDERFLOW_LOG:
            break
        hi = lo
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        with np.errstate(all="ignore"):
            v = g(mid)
        if not np.isfinite(v) or v < UNDERFLOW_LOG:
            lo = mid
        else:
            hi = mid
        if hi / lo < 1 + 1e-6:
            break
    return hi


def _log_quad(f, lo, hi, rtol, atol, chunk=1.0):
    """Integrate f over [exp(lo), exp(hi)] in the log variable, chunkwise."""
    total, err = 0.0, 0.0
    edges = np.linspace(lo, hi, max(2, int(math.ceil((hi - lo) / chunk)) + 1))
    for a, b in zip(edges[:-1], edges[1:]):
        val, e, *rest = quad(lambda x: f(math.exp(x)) * math.exp(x), a, b, epsabs=atol, epsrel=rtol, limit=200, full_output=1)
        if len(rest) > 1 and e > max(atol, rtol * abs(val)) * 10:
            raise QuadratureError(f"quadrature did not converge on [{math.exp(a):.3e}, {math.exp(b):.3e}]", bracket=(math.exp(a), math.exp(b)))
        total += val
        err += e
    return total, err


def convergence_integral_details(region, sol, t_end, rtol=1e-8, atol=1e-10):
    """P_γ(t_end) = R ∫|p_γ| with its quadrature diagnostics.

    The exponential-region integral starts at the origin; it is realised
    from the cutoff t_min where R|p| underflows, and the neglected mass is
    estimated from the local log-slope at t_min.
    """
    region = as_region(region)
    f = _integrand(region, sol)
    z0 = _matching_scale(region, sol)
    z_small = 1e-8 * z0
    if region is Region.EPS:
        if not 0 < t_end <= 1:
            raise DomainError("exponential-region integral needs 0 < t_end <= 1")
        t_min = _eps_cutoff(sol)
        total, err = 0.0, 0.0
        split = 0.5
        if t_end > split:
            # near t=1 integrate in ln(1 - t)
            g = lambda z: f(1.0 - z)
            z_end = 1.0 - t_end
            lo_z = max(z_end, z_small)
            if t_end == 1.0:
                total += f(1.0) * z_small
            v, e = _log_quad(g, math.log(lo_z), math.log(1.0 - split), rtol, atol)
            total, err = total + v, err + e
            upper = split
        else:
            upper = t_end
        if upper > t_min:
            v, e = _log_quad(f, math.log(t_min), math.log(upper), rtol, atol)
            total, err = total + v, err + e
        # one-term tail: R|p| ~ R|p(t_min)| (t/t_min)^slope below the cutoff
        lp0 = _log_integrand(region, sol, t_min)
        slope = (_log_integrand(region, sol, 1.01 * t_min) - lp0) / math.log(1.01)
        trunc = math.exp(lp0) * t_min / (slope + 1.0) if slope > 0 else math.inf
        return ConvergenceIntegral(total, err, t_min, trunc)
    if t_end < 1:
        raise DomainError("trigonometric-region integral needs t_end >= 1")
    if t_end == 1:
        return ConvergenceIntegral(0.0, 0.0, 1.0, 0.0)
    g = lambda z: f(1.0 + z)
    total = f(1.0) * min(z_small, t_end - 1.0)
    if t_end - 1.0 > z_small:
        v, err = _log_quad(g, math.log(z_small), math.log(t_end - 1.0), rtol, atol)
    else:
        v, err = 0.0, 0.0
    return ConvergenceIntegral(total + v, err, 1.0, 0.0)


def convergence_integral(region, sol, t_end, rtol=1e-8, atol=1e-10):
    """P_γ(t_end), the convergence integral of the iterated series."""
    return convergence_integral_details(region, sol, t_end, rtol, atol).value


def derivative_cross_check(region, sol, t, h=None):
    """Relative gaps of the analytic dK²/dt, d²K²/dt² to five-point differences.

    The default step 2e-4·t balances truncation against the roundoff of
    differencing K², which limits the check to where the potential term
    still shapes K² (roughly t < 2 in the trigonometric region).
    """
    t = float(t)
    h = 2e-4 * t if h is None else h
    h = 2.0 ** math.floor(math.log2(h))
    t = round(t / h) * h
    f = np.asarray(k_squared(region, sol, t + h * np.arange(-2, 3)))
    d1 = (f[0] - 8 * f[1] + 8 * f[3] - f[4]) / (12 * h)
    d2 = (-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12 * h * h)
    a1, a2 = k_squared_derivatives(region, sol, t)
    return abs(d1 - a1) / abs(a1), abs(d2 - a2) / abs(a2)


def shaped_range(sol, t_hi=2.0, fraction=1e-2, n=400):
    """Upper end of [1, t_hi] over which g²U(s; Rt) stays above fraction·k².

    Beyond it K_tau² is k² up to a small tail and differencing K² is
    dominated by roundoff.
    """
    if sol.cls is None:
        return t_hi
    t = np.linspace(1.0, t_hi, n)
    ln = math.log(sol.potential_at_R) + potentials.log_potential_ratio(sol.cls, sol.s, sol.R, t)
    keep = ln >= math.log(fraction) + 2 * math.log(sol.k)
    return float(t[keep][-1]) if keep.any() else 1.0
