"""
The regular radial solution as a two-region iterated series.

With t = r/R, the exponential region (t < 1) is expanded about the
growing exponential A e^{Φ}, Φ(t) = R ∫_1^t K_eps, and the trigonometric
region (t > 1) about A (C cos θ + S sin θ), θ(t) = R ∫_1^t K_tau, where
A = (k²/K²)^{1/4}.  Each higher term solves a Volterra equation driven by
the residual potential Δ, with the Green function normalised to a unit
jump in ∂G/∂t.  Writing p = Δ/(RK), the recursions become

    v_n(t) = ∫_0^t (p/2) [1 - exp(-2(Φ(t) - Φ(t')))] v_{n-1}(t') dt'
    c_m(t) = -∫_1^t p sin θ' (c_{m-1} cos θ' + s_{m-1} sin θ') dt'
    s_m(t) = +∫_1^t p cos θ' (c_{m-1} cos θ' + s_{m-1} sin θ') dt'

with w_eps,n = A e^{Φ} v_n and w_tau,m = A (c_m cos θ + s_m sin θ).  The two
partial sums are joined at t = 1 by value and slope.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson, quad
from scipy.interpolate import CubicSpline

from . import localwave, potentials
from .errors import DomainError, MatchingError, NotAsymptoticError, QuadratureError
from .freewaves import phase_from_values
from .localwave import Region, as_region

log = logging.getLogger(__name__)

CUTOFF_LOG = -40.0          # ln(R|p|) below which the exponential region is dropped
FAR_LOG_RATIO = math.log(1e-12)
ASYMPTOTIC_RTOL = 1e-8


# --------------------------------------------------------------------------
# sample grids


@dataclass(frozen=True)
class RegionGrid:
    """Local-wave quantities sampled on one region.

    ``phase`` is Φ (exponential region, <= 0) or θ (trigonometric, >= 0),
    both measured from t = 1.
    """

    region: Region
    t: np.ndarray
    log_k: np.ndarray
    dlog_a: np.ndarray
    p: np.ndarray
    phase: np.ndarray
    k: float
    R: float

    @property
    def log_a(self):
        return 0.5 * math.log(self.k) - 0.5 * self.log_k

    @property
    def dphase(self):
        return self.R * np.exp(self.log_k)

    def __len__(self):
        return self.t.size


def _local(region, sol, t):
    M, q, dq, _ = localwave.scaled_k_squared(region, sol, t)
    if np.any(~(q > 0)):
        bad = t[~(q > 0)][0]
        raise DomainError(f"K² <= 0 at t={bad!r} in the {region.value} region")
    return 0.5 * (M + np.log(q)), -0.25 * dq / q


def _p(region, sol, t):
    with np.errstate(all="ignore"):
        sgn, lp = localwave.log_abs_discriminant(region, sol, t)
        out = sgn * np.exp(lp)
    return np.where(np.isfinite(out), out, 0.0)


def eps_lower_cutoff(sol, threshold=CUTOFF_LOG):
    """Smallest t at which R|p_eps| is still above ``exp(threshold)``.

    Everything below is dropped from the exponential-region integrals.
    """
    z0 = localwave._matching_scale(Region.EPS, sol)
    cand = np.unique(np.concatenate([
        np.geomspace(1e-300, 0.5, 3000),
        1.0 - np.geomspace(min(1e-3 * z0, 0.25), 0.5, 400),
    ]))
    with np.errstate(all="ignore"):
        _, q, _, _ = localwave.scaled_k_squared(Region.EPS, sol, cand)
        ok = np.isfinite(q) & (q > 0)
        lp = np.full_like(cand, -np.inf)
        _, lp[ok] = localwave.log_abs_discriminant(Region.EPS, sol, cand[ok])
    lp = lp + math.log(sol.R)
    above = np.isfinite(lp) & (lp >= threshold)
    if not above.any():
        return float(cand[-1])
    i = int(np.flatnonzero(above)[0])
    if i == 0:
        raise QuadratureError(
            "exponential-region discriminant does not decay toward the origin", bracket=(0.0, cand[0])
        )
    return float(cand[i - 1])


def far_point(sol, ratio_log=FAR_LOG_RATIO):
    """Smallest t >= 2 with g²U(s; Rt) below exp(ratio_log) k²."""
    if sol.cls is None:
        return 2.0
    target = ratio_log + 2.0 * math.log(sol.k)
    lnVR = math.log(sol.potential_at_R)
    t = 2.0
    while lnVR + potentials.log_potential_ratio(sol.cls, sol.s, sol.R, t) > target:
        t *= 1.25
        if t > 1e8:
            raise NotAsymptoticError("potential does not fall off within t < 1e8")
    return t


def _midpoints(region, t):
    a, b = t[:-1], t[1:]
    if region is Region.EPS:
        za, zb = 1.0 - a, 1.0 - b
        deep = b <= 0.5
        near = (~deep) & (zb > 0)
        mid = 0.5 * (a + b)
        mid = np.where(deep, np.sqrt(a * b), mid)
        mid = np.where(near, 1.0 - np.sqrt(np.abs(za * zb)), mid)
        return mid
    za, zb = a - 1.0, b - 1.0
    near = (za > 0) & (zb <= 1.0)
    return np.where(near, 1.0 + np.sqrt(np.abs(za * zb)), 0.5 * (a + b))


def build_grid(region, sol, t_end=None, resolution=0.01, phase_step=0.05, max_passes=40):
    """Adaptive sample grid for one region.

    Points are geometric in |1 - t| down to 1e-3 of the width over which K²
    doubles, geometric in t near the origin, and refined until ln K changes
    by at most ``resolution`` (and θ by at most ``phase_step``) per step.
    """
    region = as_region(region)
    z0 = localwave._matching_scale(region, sol)
    z_min = 1e-3 * z0
    per = 1.0 / resolution
    if region is Region.EPS:
        t_lo = eps_lower_cutoff(sol) if t_end is None else float(t_end)
        t_lo = min(t_lo, 1.0 - 2 * z_min)
        z_hi = 1.0 - max(t_lo, 0.5)
        nz = max(8, int(per * math.log(z_hi / z_min)))
        parts = [1.0 - np.geomspace(z_min, z_hi, nz), [1.0]]
        if t_lo < 0.5:
            parts.append(np.geomspace(t_lo, 0.5, max(8, int(per * math.log(0.5 / t_lo)))))
    else:
        T = far_point(sol) if t_end is None else float(t_end)
        if not T > 1.0:
            raise DomainError("trigonometric grid needs t_end > 1")
        z_hi = T - 1.0
        z_min = min(z_min, 0.1 * z_hi)
        nz = max(8, int(per * math.log(z_hi / z_min)))
        parts = [1.0 + np.geomspace(z_min, z_hi, nz), [1.0]]
    t = np.unique(np.concatenate(parts))
    for _ in range(max_passes):
        logk, _ = _local(region, sol, t)
        bad = np.abs(np.diff(logk)) > resolution
        if region is Region.TAU:
            dth = sol.R * np.exp(0.5 * (logk[:-1] + logk[1:])) * np.diff(t)
            bad |= dth > phase_step
        if not bad.any():
            break
        t = np.unique(np.concatenate([t, _midpoints(region, t)[bad]]))
    else:
        log.warning("grid refinement hit the pass limit with %d coarse steps", int(bad.sum()))
    logk, dloga = _local(region, sol, t)
    p = _p(region, sol, t)
    rk = sol.R * np.exp(logk)
    if region is Region.EPS:
        # integrate from t = 1 downward so the phase near t = 1 keeps its digits
        back = cumulative_simpson(rk[::-1], x=-t[::-1], initial=0.0)
        phase = -back[::-1]
    else:
        phase = cumulative_simpson(rk, x=t, initial=0.0)
    return RegionGrid(region, t, logk, dloga, p, phase, float(sol.k), float(sol.R))


# --------------------------------------------------------------------------
# terms


@dataclass(frozen=True)
class WaveTerm:
    """One term of a region's series on that region's grid.

    Exponential region: ``ratio`` = w_n / (A e^{Φ}) and ``companion`` = J_n
    with d(ratio)/dt = Φ' J_n; ``sign`` and ``log_magnitude`` describe w_n
    itself.  Trigonometric region: ``c``, ``s`` with w_m = A (c cos θ + s sin θ).
    """

    region: Region
    order: int
    t: np.ndarray
    sign: np.ndarray | None = None
    log_magnitude: np.ndarray | None = None
    ratio: np.ndarray | None = None
    companion: np.ndarray | None = None
    c: np.ndarray | None = None
    s: np.ndarray | None = None

    def values(self, grid):
        """w on the grid (exponential region values may underflow to 0)."""
        if self.region is Region.EPS:
            with np.errstate(over="ignore", under="ignore"):
                return self.sign * np.exp(self.log_magnitude)
        return np.exp(grid.log_a) * (self.c * np.cos(grid.phase) + self.s * np.sin(grid.phase))

    def derivatives(self, grid):
        """dw/dt on the grid."""
        if self.region is Region.EPS:
            w0 = np.exp(grid.log_a + grid.phase)
            return w0 * ((grid.dlog_a + grid.dphase) * self.ratio + grid.dphase * self.companion)
        a = np.exp(grid.log_a)
        cs, sn = np.cos(grid.phase), np.sin(grid.phase)
        return a * (grid.dlog_a * (self.c * cs + self.s * sn) + grid.dphase * (self.s * cs - self.c * sn))

    def sup_norm(self, grid):
        if self.region is Region.EPS:
            with np.errstate(divide="ignore"):
                return float(np.exp(np.max(self.log_magnitude)))
        return float(np.max(np.abs(self.values(grid))))


def _eps_term(grid, order, ratio, companion):
    with np.errstate(divide="ignore"):
        logmag = grid.log_a + grid.phase + np.log(np.abs(ratio))
    return WaveTerm(Region.EPS, order, grid.t, np.sign(ratio), logmag, ratio, companion)


def _moments(x):
    """μ_j(x) = ∫_0^1 s^j exp(-x(1 - s)) ds for j = 0, 1, 2."""
    x = np.asarray(x, dtype=float)
    small = x < 0.5
    xs = np.where(small, 1.0, x)
    m0 = -np.expm1(-xs) / xs
    m1 = (1.0 - m0) / xs
    m2 = (1.0 - 2.0 * m1) / xs
    # power series Σ (-x)^m j! / (j+m+1)! where the recurrence cancels
    xm = np.where(small, x, 0.0)
    ser = [np.zeros_like(x) for _ in range(3)]
    term = np.ones_like(x)
    for m in range(24):
        for j in range(3):
            ser[j] += term * math.factorial(j) / math.factorial(j + m + 1)
        term = term * (-xm)
    return (np.where(small, ser[0], m0), np.where(small, ser[1], m1), np.where(small, ser[2], m2))


def _step_weights(h, rho):
    """Weights (w_prev, w_here, w_next) of a quadratic through three nodes.

    The step runs from node i to i+1 over length h in Φ; node i-1 sits
    ``rho * h`` behind.  Returned with the decayed and the plain integral.
    """
    mu = _moments(2.0 * h)
    out = []
    for m0, m1, m2 in (mu, (1.0, 0.5, 1.0 / 3.0)):
        # g(s) = a + b s + c s², a = g_i, b + c = D1, -ρ b + ρ² c = D2
        cp = m2 - m1                    # coefficient of c after b = D1 - c
        wc_next = cp / (1.0 + rho)       # c = (D2 + ρ D1) / (ρ (1 + ρ))
        wc_prev = cp / (rho * (1.0 + rho))
        w_next = m1 + wc_next
        w_prev = wc_prev
        w_here = m0 - w_next - w_prev
        out.append((h * w_prev, h * w_here, h * w_next))
    return out


def order_zero(grid, coeffs=None):
    """The leading term on a grid; the trigonometric one needs (C⁺, S⁺)."""
    if grid.region is Region.EPS:
        return _eps_term(grid, 0, np.ones_like(grid.t), np.zeros_like(grid.t))
    if coeffs is None:
        raise DomainError("trigonometric leading term needs (C, S)")
    c, s = _coeff_pair(coeffs)
    return WaveTerm(Region.TAU, 0, grid.t, c=np.full_like(grid.t, c), s=np.full_like(grid.t, s))


def _coeff_pair(coeffs):
    if isinstance(coeffs, MatchCoefficients):
        return coeffs.c_plus, coeffs.s_plus
    return float(coeffs[0]), float(coeffs[1])


def iterate_term(grid, prev, aux=(0.0, 1.0), plus=None):
    """Next term of the region's series from the previous one.

    In the exponential region the companion integral
    J(t) = ∫ g exp(-2(Φ(t) - Φ')) dΦ', g = p v / Φ', is advanced with an
    exponential integrator for g quadratic in Φ over each step, which stays
    exact in the deep region where Φ' is enormous.  In the trigonometric
    region the auxiliary pair ``aux`` = (C⁻, S⁻) and the physical pair
    ``plus`` = (C⁺, S⁺) enter only through the invariant combination
    d·sin(θ - θ'), d = C⁺S⁻ - C⁻S⁺.
    """
    if prev.region is not grid.region:
        raise DomainError("term and grid belong to different regions")
    if grid.region is Region.EPS:
        g = grid.p * prev.ratio / grid.dphase
        h = np.diff(grid.phase)
        rho = np.ones_like(h)
        rho[1:] = h[:-1] / np.where(h[1:] > 0, h[1:], 1.0)
        (dp, dh, dn), (fp, fh, fn) = _step_weights(h, rho)
        gp = np.concatenate([[g[0]], g[:-2]])
        # first step: no node behind, fall back to the linear model
        dp[0], fp[0] = 0.0, 0.0
        mu0, mu1, _ = _moments(2.0 * h[:1])
        dh[0], dn[0] = h[0] * (mu0[0] - mu1[0]), h[0] * mu1[0]
        fh[0], fn[0] = 0.5 * h[0], 0.5 * h[0]
        inc = dp * gp + dh * g[:-1] + dn * g[1:]
        decay = np.exp(-2.0 * h)
        J = np.empty_like(g)
        J[0] = 0.0
        for i in range(h.size):
            J[i + 1] = decay[i] * J[i] + inc[i]
        full = np.concatenate([[0.0], np.cumsum(fp * gp + fh * g[:-1] + fn * g[1:])])
        ratio = 0.5 * (full - J)
        if not np.all(np.isfinite(ratio)):
            raise QuadratureError("non-finite exponential-region iterate", bracket=(grid.t[0], grid.t[-1]))
        return _eps_term(grid, prev.order + 1, ratio, J)
    if plus is None:
        plus = (1.0, 0.0)
    cp, sp = _coeff_pair(plus)
    cm, sm = float(aux[0]), float(aux[1])
    d = cp * sm - cm * sp
    if d == 0:
        raise MatchingError("auxiliary pair is proportional to the physical pair")
    cs, sn = np.cos(grid.phase), np.sin(grid.phase)
    drive = grid.p * (prev.c * cs + prev.s * sn)
    i_cos = cumulative_simpson(drive * cs, x=grid.t, initial=0.0)
    i_sin = cumulative_simpson(drive * sn, x=grid.t, initial=0.0)
    ia = cp * i_cos + sp * i_sin
    ib = cm * i_cos + sm * i_sin
    c = (cm * ia - cp * ib) / d
    s = (sm * ia - sp * ib) / d
    return WaveTerm(Region.TAU, prev.order + 1, grid.t, c=c, s=s)


def series_terms(grid, order, coeffs=None, aux=(0.0, 1.0)):
    """Terms 0..order of one region's series."""
    terms = [order_zero(grid, coeffs)]
    for _ in range(order):
        terms.append(iterate_term(grid, terms[-1], aux=aux, plus=coeffs))
    return terms


# --------------------------------------------------------------------------
# leading terms and Wronskians by direct quadrature


def phase_integral(region, sol, t):
    """R ∫_1^t K_γ dt' by adaptive quadrature (negative for t < 1)."""
    region = as_region(region)
    t = float(t)
    if t == 1.0:
        return 0.0

    def f(x):
        lk, _ = _local(region, sol, np.array([x]))
        return math.exp(lk[0])

    lo, hi = (t, 1.0) if t < 1 else (1.0, t)
    pts = []
    z0 = localwave._matching_scale(region, sol)
    for z in (z0, 10 * z0, 100 * z0):
        x = 1.0 - z if t < 1 else 1.0 + z
        if lo < x < hi:
            pts.append(x)
    edges = [lo] + sorted(pts) + [hi]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if region is Region.EPS and a < 0.5:
            split = min(b, 0.5)
            v, _ = localwave._log_quad(f, math.log(a), math.log(split), 1e-12, 0.0, chunk=0.25)
            total += v
            a = split
            if a >= b:
                continue
        v, _ = quad(f, a, b, epsabs=0.0, epsrel=1e-12, limit=400)
        total += v
    return sol.R * total if t > 1 else -sol.R * total


def leading_term(region, sign, sol, t, C=None, S=None):
    """Order-0 term at a single t.

    Exponential region: returns (sign, log-magnitude) of
    A exp(±R ∫_1^t K_eps).  Trigonometric region: A (C cos θ + S sin θ).
    """
    region = as_region(region)
    t = float(t)
    if (region is Region.EPS and t > 1) or (region is Region.TAU and t < 1):
        raise DomainError(f"t={t!r} lies outside the {region.value} region")
    lk, _ = _local(region, sol, np.array([t]))
    log_a = 0.5 * math.log(sol.k) - 0.5 * lk[0]
    ph = phase_integral(region, sol, t)
    if region is Region.EPS:
        sgn = 1.0 if sign in ("+", 1, 1.0) else -1.0
        return 1.0, log_a + sgn * ph
    if C is None or S is None:
        raise DomainError("trigonometric leading term needs C and S")
    return math.exp(log_a) * (C * math.cos(ph) + S * math.sin(ph))


def wronskian_check(region, sol, coeffs=None, t=0.7, h=None):
    """w⁺ w⁻' - w⁻ w⁺' of the order-0 pair by five-point differences.

    Exponential region: w± = A e^{±Φ}, expected -2kR; the stencil acts on
    ln w± = ln A ± Φ so the step only has to resolve the variation of K,
    not the exponential itself.  Trigonometric region:
    w± = A (C± cos θ + S± sin θ), expected kR (C⁺S⁻ - C⁻S⁺).
    ``coeffs`` is (C⁺, S⁺, C⁻, S⁻) or a MatchCoefficients.
    """
    region = as_region(region)
    if region is Region.TAU and t < 1:
        t = 1.0 + (1.0 - t)
    M, q, dq, _ = localwave.scaled_k_squared(region, sol, np.array([t]))
    if h is None:
        scale = 1.0 / max(abs(0.5 * dq[0] / q[0]), 1e-300)
        h = 1e-3 * min(scale, abs(1.0 - t))
        if region is Region.TAU:
            h = min(h, 1e-2 / (sol.R * math.exp(0.5 * (M[0] + math.log(q[0])))))
    # power-of-two step and a t on its lattice keep the stencil nodes exact
    h = 2.0 ** math.floor(math.log2(h))
    t = round(t / h) * h

    def f(x):
        lk, _ = _local(region, sol, np.array([x]))
        return math.exp(lk[0])

    offs = np.arange(-2, 3) * h
    nodes = t + offs
    # phase increments from t, so only the local variation is integrated
    dph = np.array([sol.R * quad(f, t, x, epsabs=0.0, epsrel=1e-13)[0] if x != t else 0.0 for x in nodes])
    lk, _ = _local(region, sol, nodes)
    log_amp = 0.5 * math.log(sol.k) - 0.5 * lk
    stencil = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / (12.0 * h)
    if region is Region.EPS:
        dlp = stencil @ (log_amp + dph)
        dlm = stencil @ (log_amp - dph)
        # w⁺w⁻ = A² once e^{±Φ(t)} cancel
        return float(math.exp(2 * log_amp[2]) * (dlm - dlp))
    if coeffs is None:
        coeffs = (1.0, 0.0, 0.0, 1.0)
    if isinstance(coeffs, MatchCoefficients):
        coeffs = (coeffs.c_plus, coeffs.s_plus, coeffs.c_minus, coeffs.s_minus)
    cp, sp, cm, sm = coeffs
    ph = phase_integral(region, sol, t) + dph
    amp = np.exp(log_amp)
    wp = amp * (cp * np.cos(ph) + sp * np.sin(ph))
    wm = amp * (cm * np.cos(ph) + sm * np.sin(ph))
    dp, dm = stencil @ wp, stencil @ wm
    return float(wp[2] * dm - wm[2] * dp)


# --------------------------------------------------------------------------
# matching and the assembled solution


@dataclass(frozen=True)
class MatchCoefficients:
    c_plus: float
    s_plus: float
    c_minus: float = 0.0
    s_minus: float = 1.0
    cutoff: tuple = (0, 0)

    def __post_init__(self):
        if self.c_plus * self.s_minus - self.c_minus * self.s_plus == 0:
            raise MatchingError("C⁺S⁻ - C⁻S⁺ vanishes")

    @property
    def d_tau(self):
        return self.c_plus * self.s_minus - self.c_minus * self.s_plus

    def scaled(self, alpha):
        return MatchCoefficients(alpha * self.c_plus, alpha * self.s_plus, self.c_minus, self.s_minus, self.cutoff)


def _sum_at_end(grid, terms):
    """(u, du/dt) of an exponential-region partial sum at t = 1."""
    u = sum(float(w.values(grid)[-1]) for w in terms)
    du = sum(float(w.derivatives(grid)[-1]) for w in terms)
    return u, du


def solve_matching(u1, du1, tau_grid, cutoff=(0, 0), aux=(0.0, 1.0), rtol=1e-12):
    """(C⁺, S⁺) from the value and slope at t = 1.

    Higher trigonometric terms vanish with their slopes at t = 1, so the
    system involves only the leading term's cosine and sine columns.
    """
    a = math.exp(tau_grid.log_a[0])
    da = a * tau_grid.dlog_a[0]
    th = tau_grid.dphase[0]
    m = np.array([[a, 0.0], [da, a * th]])
    det = np.linalg.det(m)
    # sine of the angle between the columns, independent of their scales
    if not abs(det) > rtol * np.linalg.norm(m[:, 0]) * np.linalg.norm(m[:, 1]):
        raise MatchingError(f"matching system is singular (det={det:.3e})")
    c, s = np.linalg.solve(m, [u1, du1])
    return MatchCoefficients(float(c), float(s), float(aux[0]), float(aux[1]), tuple(cutoff))


@dataclass
class ScatteringResult:
    sol: object
    coeffs: MatchCoefficients
    eps_grid: RegionGrid
    tau_grid: RegionGrid
    eps_terms: list
    tau_terms: list
    phase_shift: float
    branch: int
    diagnostics: dict = field(default_factory=dict)

    @property
    def cutoff(self):
        return self.coeffs.cutoff

    def _eps_parts(self, n=None):
        terms = self.eps_terms[: (self.cutoff[0] if n is None else n) + 1]
        ratio = sum(w.ratio for w in terms)
        comp = sum(w.companion for w in terms)
        return ratio, comp

    def _tau_parts(self, m=None):
        terms = self.tau_terms[: (self.cutoff[1] if m is None else m) + 1]
        return sum(w.c for w in terms), sum(w.s for w in terms)

    def log_wave_eps(self):
        """(sign, ln|u|) of the exponential-region partial sum on its grid."""
        g = self.eps_grid
        ratio, _ = self._eps_parts()
        with np.errstate(divide="ignore"):
            return np.sign(ratio), g.log_a + g.phase + np.log(np.abs(ratio))

    def samples(self, order=None):
        """(t, u, du/dt) on the union of both grids, t = 1 taken from the tau side."""
        ge, gt = self.eps_grid, self.tau_grid
        n, m = (None, None) if order is None else order
        ratio, comp = self._eps_parts(n)
        w0 = np.exp(ge.log_a + ge.phase)
        ue = w0 * ratio
        due = w0 * ((ge.dlog_a + ge.dphase) * ratio + ge.dphase * comp)
        c, s = self._tau_parts(m)
        a = np.exp(gt.log_a)
        cs, sn = np.cos(gt.phase), np.sin(gt.phase)
        ut = a * (c * cs + s * sn)
        dut = a * (gt.dlog_a * (c * cs + s * sn) + gt.dphase * (s * cs - c * sn))
        t = np.concatenate([ge.t[:-1], gt.t])
        return t, np.concatenate([ue[:-1], ut]), np.concatenate([due[:-1], dut])


def wavefunction(result, t, derivative=False):
    """Partial sum u(t) (or du/dt) at arbitrary t by spline interpolation
    of the slowly varying factors on the region grids."""
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    eps = t <= 1.0
    if np.any(t < result.eps_grid.t[0]) or np.any(t > result.tau_grid.t[-1]):
        raise DomainError("t outside the sampled range")
    ge, gt = result.eps_grid, result.tau_grid
    if eps.any():
        ratio, comp = result._eps_parts()
        x = ge.t
        lw = CubicSpline(x, ge.log_a + ge.phase)(t[eps])
        fac = CubicSpline(x, ratio)(t[eps])
        if derivative:
            sp = CubicSpline(x, ge.log_a + ge.phase)
            fac = sp.derivative()(t[eps]) * fac + CubicSpline(x, ge.dphase * comp)(t[eps])
        out[eps] = np.exp(lw) * fac
    tau = ~eps
    if tau.any():
        c, s = result._tau_parts()
        x = gt.t
        la = CubicSpline(x, gt.log_a)
        th = CubicSpline(x, gt.phase)
        cc, ss = CubicSpline(x, c)(t[tau]), CubicSpline(x, s)(t[tau])
        a, ph = np.exp(la(t[tau])), th(t[tau])
        if derivative:
            kk = CubicSpline(x, gt.dphase)(t[tau])
            out[tau] = a * (la.derivative()(t[tau]) * (cc * np.cos(ph) + ss * np.sin(ph))
                            + kk * (ss * np.cos(ph) - cc * np.sin(ph)))
        else:
            out[tau] = a * (cc * np.cos(ph) + ss * np.sin(ph))
    return out if out.ndim else float(out)


def _check_far(sol, t_far):
    if sol.cls is None:
        return
    lnV = math.log(sol.potential_at_R) + potentials.log_potential_ratio(sol.cls, sol.s, sol.R, t_far)
    if lnV >= math.log(ASYMPTOTIC_RTOL) + 2 * math.log(sol.k):
        raise NotAsymptoticError(
            f"g²U at t={t_far!r} is {math.exp(lnV) / sol.k**2:.3e} k², not below {ASYMPTOTIC_RTOL:g} k²"
        )


def phase_shift(result, t_far=None):
    """(δ_l principal value, branch count) from the partial sum at t_far.

    The branch count is the integer n with δ_pv + nπ closest to the phase
    accumulated by the trigonometric series relative to the free wave.
    """
    sol = result.sol
    gt = result.tau_grid
    if t_far is None:
        t_far = float(gt.t[-1])
    _check_far(sol, t_far)
    if t_far == gt.t[-1]:
        c, s = result._tau_parts()
        a = math.exp(gt.log_a[-1])
        th = gt.phase[-1]
        u = a * (c[-1] * math.cos(th) + s[-1] * math.sin(th))
        du = a * (gt.dlog_a[-1] * (c[-1] * math.cos(th) + s[-1] * math.sin(th))
                  + gt.dphase[-1] * (s[-1] * math.cos(th) - c[-1] * math.sin(th)))
        cc, ss = c[-1], s[-1]
    else:
        u = wavefunction(result, t_far)
        du = wavefunction(result, t_far, derivative=True)
        c, s = result._tau_parts()
        cc, ss = CubicSpline(gt.t, c)(t_far), CubicSpline(gt.t, s)(t_far)
        th = float(CubicSpline(gt.t, gt.phase)(t_far))
    r = sol.R * t_far
    delta = phase_from_values(sol.k, sol.l, r, u, du / sol.R)
    # u ∝ sin(θ + atan2(c, s)) against sin(kr - lπ/2 + δ)
    cont = th + math.atan2(cc, ss) - sol.k * r + sol.l * math.pi / 2
    branch = int(round((cont - delta) / math.pi))
    return delta, branch


def _thin(t, spacing):
    keep = [0]
    for i in range(1, len(t)):
        if t[i] - t[keep[-1]] >= spacing:
            keep.append(i)
    return np.array(keep)


def schrodinger_residual(result, order=None, margin=4, spacing=1e-4):
    """Relative residual of u'' = [R²(g²U - k²) + l(l+1)/t²] u on the grids.

    u'' is a spline derivative of the analytic slope, taken on samples
    thinned to ``spacing`` so that rounding in the slope is not amplified;
    ``margin`` samples at each end are skipped.  The residual sup is
    normalised by the sup of |R²(g²U - k²) u| over the same samples.
    """
    sol = result.sol
    worst = 0.0
    for grid in (result.eps_grid, result.tau_grid):
        t, u, du = _region_samples(result, grid, order)
        idx = _thin(t, spacing)
        t, u, du = t[idx], u[idx], du[idx]
        d2u = CubicSpline(t, du).derivative()(t)
        # R²(g²U - k²) + l(l+1)/t² = -R²K_tau², since λ_tau² = l(l+1)
        M, q, _, _ = localwave.scaled_k_squared(Region.TAU, sol, t)
        with np.errstate(over="ignore", invalid="ignore"):
            coef = -(sol.R**2) * np.exp(M) * q
            res = np.abs(d2u - coef * u)[margin:-margin]
            scale = np.abs(coef * u)[margin:-margin]
        ok = np.isfinite(res) & np.isfinite(scale)
        if ok.any() and scale[ok].max() > 0:
            worst = max(worst, float(res[ok].max() / scale[ok].max()))
    return worst


def _region_samples(result, grid, order):
    n, m = (None, None) if order is None else order
    if grid.region is Region.EPS:
        ratio, comp = result._eps_parts(n)
        w0 = np.exp(grid.log_a + grid.phase)
        return grid.t, w0 * ratio, w0 * ((grid.dlog_a + grid.dphase) * ratio + grid.dphase * comp)
    c, s = result._tau_parts(m)
    a = np.exp(grid.log_a)
    cs, sn = np.cos(grid.phase), np.sin(grid.phase)
    return grid.t, a * (c * cs + s * sn), a * (grid.dlog_a * (c * cs + s * sn) + grid.dphase * (s * cs - c * sn))


def match_at_one(sol, cutoff=(2, 2), aux=(0.0, 1.0), eps_grid=None, tau_grid=None):
    """(C⁺, S⁺) from smooth matching of the order-N exponential partial sum."""
    n, _ = cutoff
    ge = eps_grid if eps_grid is not None else build_grid(Region.EPS, sol)
    gt = tau_grid if tau_grid is not None else build_grid(Region.TAU, sol)
    u1, du1 = _sum_at_end(ge, series_terms(ge, n))
    return solve_matching(u1, du1, gt, cutoff, aux)


def solve_series(sol, cutoff=(2, 2), aux=(0.0, 1.0), t_far=None, resolution=0.005, with_p_values=False):
    """Build both partial sums, match them at t = 1 and extract δ_l."""
    n, m = (int(cutoff[0]), int(cutoff[1]))
    if n < 0 or m < 0:
        raise DomainError("cutoff orders must be nonnegative")
    if t_far is not None:
        _check_far(sol, t_far)
    ge = build_grid(Region.EPS, sol, resolution=resolution)
    gt = build_grid(Region.TAU, sol, t_end=t_far, resolution=resolution)
    eps_terms = series_terms(ge, n)
    u1, du1 = _sum_at_end(ge, eps_terms)
    coeffs = solve_matching(u1, du1, gt, (n, m), aux)
    tau_terms = series_terms(gt, m, coeffs=coeffs, aux=aux)
    result = ScatteringResult(sol, coeffs, ge, gt, eps_terms, tau_terms, float("nan"), 0)
    result.phase_shift, result.branch = phase_shift(result)
    _, ut, dut = _region_samples(result, gt, None)
    diag = {
        "eps_norms": [w.sup_norm(ge) for w in eps_terms],
        "tau_norms": [w.sup_norm(gt) for w in tau_terms],
        "match_value": abs(u1 - ut[0]),
        "match_slope": abs(du1 - dut[0]),
        "t_min": float(ge.t[0]),
        "t_far": float(gt.t[-1]),
        "grid_sizes": (len(ge), len(gt)),
    }
    if with_p_values:
        diag["P_eps"] = localwave.convergence_integral(Region.EPS, sol, 1.0)
        diag["P_tau"] = localwave.convergence_integral(Region.TAU, sol, float(gt.t[-1]))
    result.diagnostics = diag
    log.info("series %s cutoff %s: delta=%.10g branch=%d", getattr(sol.cls, "tag", "free"), cutoff, result.phase_shift, result.branch)
    return result


def normalized_deviation(u_a, u_b, ref_index):
    """sup|u_a/u_a[ref] - u_b/u_b[ref]| / sup|u_b/u_b[ref]| on common samples."""
    a = np.asarray(u_a) / u_a[ref_index]
    b = np.asarray(u_b) / u_b[ref_index]
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))


def leading_deviation(sol, cutoff=(2, 2), t_range=(0.5, 3.0), n_samples=2001, full=None, lead=None):
    """Relative sup-norm gap between the matched partial sum and the
    matched leading term, both normalised at t = 1."""
    full = full or solve_series(sol, cutoff)
    lead = lead or solve_series(sol, (0, 0))
    lo = max(t_range[0], full.eps_grid.t[0])
    hi = min(t_range[1], full.tau_grid.t[-1], lead.tau_grid.t[-1])
    t = np.unique(np.concatenate([np.linspace(lo, hi, n_samples), [1.0]]))
    i = int(np.searchsorted(t, 1.0))
    return normalized_deviation(wavefunction(lead, t), wavefunction(full, t), i)
