"""
Direct integration of the radial equation u'' = [g²U(s; r) + l(l+1)/r² - k²] u
in the physical variable r, used as ground truth for the series.

Inside the forbidden core the solution is carried as its log-derivative
y = u'/u (a Riccati equation that is stiff but whose decaying branch is
attracting); once the effective potential drops below k² the equation for
u itself is integrated to r_max and matched to Riccati-Bessel functions.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from . import potentials
from .errors import DomainError, OracleError
from .freewaves import phase_from_values, riccati_jn

log = logging.getLogger(__name__)

METHODS = ("DOP853", "numerov")


@dataclass(frozen=True)
class OracleConfig:
    """Integration settings.

    ``start_log`` places r_start where ln(g²U/k²) equals it, unless
    ``start_multiple`` (of R) is given.  ``switch_fraction`` sets the
    hand-over from the log-derivative phase to direct integration at the
    first r with g²U + l(l+1)/r² <= switch_fraction k².  ``r_max`` defaults
    to the larger of 20/k and the radius where g²U < 1e-10 k².
    """

    rtol: float = 1e-10
    atol: float = 1e-12
    start_log: float = 30.0
    start_multiple: float | None = None
    switch_fraction: float = 0.95
    r_max: float | None = None
    method: str = "DOP853"
    riccati_method: str = "Radau"
    numerov_steps_per_wavelength: int = 400

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise DomainError("tolerances must be positive")
        if self.method not in METHODS:
            raise DomainError(f"method must be one of {METHODS}")
        if not 0 < self.switch_fraction <= 1:
            raise DomainError("switch_fraction must lie in (0, 1]")
        if self.start_multiple is not None and not 0 < self.start_multiple < 1:
            raise DomainError("start_multiple must lie in (0, 1)")


@dataclass(frozen=True)
class OracleSolution:
    """Sampled regular solution; ``log_u`` stays finite where u underflows."""

    r: np.ndarray
    u: np.ndarray
    du: np.ndarray
    log_u: np.ndarray
    r_start: float
    r_switch: float
    r_max: float

    def rows(self):
        return [(float(a), float(b), float(c)) for a, b, c in zip(self.r, self.u, self.du)]


def _log_veff(sol, r):
    """ln of g²U(s; r) (-inf without a potential)."""
    if sol.cls is None:
        return -math.inf
    return potentials.log_potential(sol.cls, sol.s, sol.R, r)


def _q(sol, r):
    lam = sol.l * (sol.l + 1)
    with np.errstate(over="ignore"):
        v = 0.0 if sol.cls is None else math.exp(min(_log_veff(sol, r), 709.0))
    return v + lam / (r * r) - sol.k**2


def _dq(sol, r):
    lam = sol.l * (sol.l + 1)
    if sol.cls is None:
        return -2 * lam / r**3
    d1, _ = potentials.log_potential_derivatives(sol.cls, sol.s, r)
    v = math.exp(min(_log_veff(sol, r), 709.0))
    return v * float(d1) - 2 * lam / r**3


def start_radius(sol, cfg):
    if cfg.start_multiple is not None:
        return cfg.start_multiple * sol.R
    target = cfg.start_log + 2 * math.log(sol.k)
    f = lambda r: _log_veff(sol, r) - target
    hi = sol.R
    if f(hi) >= 0:
        raise OracleError("potential already exceeds the start depth at R", r=hi)
    lo = hi
    while f(lo) < 0:
        lo *= 0.5
        if lo < 1e-12 * sol.R:
            raise OracleError("core never reaches the start depth", r=lo)
    return brentq(f, lo, hi, xtol=1e-14 * sol.R)


def switch_radius(sol, cfg, r_start):
    lam = sol.l * (sol.l + 1)
    target = cfg.switch_fraction * sol.k**2
    f = lambda r: math.exp(min(_log_veff(sol, r), 709.0)) + lam / r**2 - target
    hi = sol.R
    while f(hi) > 0:
        hi *= 1.5
        if hi > 1e6 * sol.R:
            raise OracleError("effective potential never drops below k²", r=hi)
    return brentq(f, r_start, hi, xtol=1e-13 * sol.R)


def outer_radius(sol, cfg):
    if cfg.r_max is not None:
        return cfg.r_max
    r = max(20.0 / sol.k, 2.0 * sol.R)
    if sol.cls is not None:
        target = math.log(1e-10) + 2 * math.log(sol.k)
        while _log_veff(sol, r) > target:
            r *= 1.25
    return r


def _eval_points(r_eval, r0, r1):
    if r_eval is None:
        return None
    inner = [x for x in np.sort(np.asarray(r_eval, dtype=float)) if r0 < x < r1]
    return np.array([r0, *inner, r1])


def _riccati_phase(sol, cfg, r0, r1, r_eval=None):
    q0 = _q(sol, r0)
    if not q0 > 0:
        raise OracleError("start point is not in the forbidden region", r=r0)
    y0 = math.sqrt(q0) - _dq(sol, r0) / (4 * q0)

    def rhs(r, z):
        return [_q(sol, r) - z[0] * z[0], z[0]]

    def jac(r, z):
        return [[-2 * z[0], 0.0], [1.0, 0.0]]

    out = solve_ivp(rhs, (r0, r1), [y0, 0.0], method=cfg.riccati_method, jac=jac,
                    rtol=cfg.rtol, atol=cfg.atol, t_eval=_eval_points(r_eval, r0, r1))
    if not out.success:
        raise OracleError(f"log-derivative integration failed: {out.message}", r=float(out.t[-1]))
    return out.t, out.y[0], out.y[1]


def _direct_phase(sol, cfg, r0, r1, u0, du0, r_eval=None):
    if cfg.method == "numerov":
        r, u, du = _numerov(sol, cfg, r0, r1, u0, du0)
        pts = _eval_points(r_eval, r0, r1)
        if pts is None:
            return r, u, du
        return pts, CubicSpline(r, u)(pts), CubicSpline(r, du)(pts)

    def rhs(r, z):
        return [z[1], _q(sol, r) * z[0]]

    out = solve_ivp(rhs, (r0, r1), [u0, du0], method="DOP853", rtol=cfg.rtol, atol=cfg.atol * max(abs(u0), abs(du0), 1.0),
                    t_eval=_eval_points(r_eval, r0, r1))
    if not out.success:
        raise OracleError(f"direct integration failed: {out.message}", r=float(out.t[-1]))
    return out.t, out.y[0], out.y[1]


def _numerov(sol, cfg, r0, r1, u0, du0):
    """Fixed-step Numerov recursion; du is recovered by 4th-order differences."""
    n = max(16, int(cfg.numerov_steps_per_wavelength * sol.k * (r1 - r0) / (2 * math.pi)) + 1)
    r = np.linspace(r0, r1, n + 1)
    h = r[1] - r[0]
    q = np.array([_q(sol, x) for x in r])
    f = 1.0 - h * h * q / 12.0
    u = np.empty_like(r)
    u[0] = u0
    # Taylor start through h³
    dq0 = _dq(sol, r0)
    u[1] = u0 + h * du0 + 0.5 * h * h * q[0] * u0 + h**3 / 6 * (dq0 * u0 + q[0] * du0)
    for i in range(1, n):
        u[i + 1] = (2 * u[i] * (1 + 5 * h * h * q[i] / 12) - f[i - 1] * u[i - 1]) / f[i + 1]
    du = np.gradient(u, h, edge_order=2)
    du[2:-2] = (u[:-4] - 8 * u[1:-3] + 8 * u[3:-1] - u[4:]) / (12 * h)
    du[-1] = (25 * u[-1] - 48 * u[-2] + 36 * u[-3] - 16 * u[-4] + 3 * u[-5]) / (12 * h)
    return r, u, du


def integrate_regular(sol, cfg=None, r_eval=None):
    """Regular solution from r_start to r_max, normalised to u(r_switch) = 1.

    Samples are the solver's own steps, or the end points plus ``r_eval``.
    """
    cfg = cfg or OracleConfig()
    r_max = outer_radius(sol, cfg)
    if sol.cls is None:
        return integrate_free_start(sol, cfg, r_max, r_eval=r_eval)
    r0 = start_radius(sol, cfg)
    r_sw = switch_radius(sol, cfg, r0)
    if not r0 < sol.R < r_max:
        raise DomainError("oracle needs r_start < R < r_max")
    rr, y, lnu = _riccati_phase(sol, cfg, r0, r_sw, r_eval)
    lnu = lnu - lnu[-1]
    r2, u2, du2 = _direct_phase(sol, cfg, r_sw, r_max, 1.0, float(y[-1]), r_eval)
    with np.errstate(under="ignore"):
        u1 = np.exp(lnu)
    with np.errstate(divide="ignore"):
        log2 = np.log(np.abs(u2))
    return OracleSolution(
        np.concatenate([rr[:-1], r2]),
        np.concatenate([u1[:-1], u2]),
        np.concatenate([(y * u1)[:-1], du2]),
        np.concatenate([lnu[:-1], log2]),
        float(r0), float(r_sw), float(r_max),
    )


def integrate_free_start(sol, cfg, r_max=None, r0=None, r_eval=None):
    """Start from u ~ r^{l+1} near the origin (no singular core)."""
    if sol.cls is not None and sol.cls.core_law in ("E", "P"):
        if r0 is None:
            raise DomainError("a singular core needs the log-derivative start")
    r_max = r_max or outer_radius(sol, cfg)
    r0 = r0 or 1e-6 / sol.k
    l = sol.l
    r, u, du = _direct_phase(sol, cfg, r0, r_max, r0 ** (l + 1), (l + 1) * r0**l, r_eval)
    with np.errstate(divide="ignore"):
        return OracleSolution(r, u, du, np.log(np.abs(u)), float(r0), float(r0), float(r_max))


def integrate_hard_wall(k, l, r_wall, cfg=None, r_max=None):
    """Free solution with u(r_wall) = 0, u'(r_wall) = 1 (calibration mode)."""
    from .matching import free_solution

    cfg = cfg or OracleConfig()
    sol = free_solution(k, l, r_wall)
    r_max = r_max or max(20.0 / k, 2 * r_wall)
    r, u, du = _direct_phase(sol, cfg, r_wall, r_max, 0.0, 1.0)
    with np.errstate(divide="ignore"):
        return OracleSolution(r, u, du, np.log(np.abs(u)), float(r_wall), float(r_wall), float(r_max))


def phase_from_solution(k, l, osol):
    """Principal-value δ_l at the outer end of a sampled solution."""
    return phase_from_values(k, l, osol.r[-1], osol.u[-1], osol.du[-1])


def count_nodes(osol):
    """Sign changes of u beyond the switch point."""
    u = osol.u[osol.r >= osol.r_switch]
    return int(np.count_nonzero(np.signbit(u[1:]) != np.signbit(u[:-1])))


def _free_nodes(l, x_max):
    x = np.linspace(1e-8, x_max, max(2000, int(40 * x_max)))
    f = riccati_jn(l, x)[0]
    return int(np.count_nonzero(np.signbit(f[1:]) != np.signbit(f[:-1])))


def phase_shift_oracle(sol, cfg=None, return_solution=False):
    """δ_l ∈ (-π/2, π/2] and the branch count n with δ_l + nπ continuous.

    The branch follows from the node count of u against that of the free
    wave kr·j_l(kr) on the same interval.
    """
    cfg = cfg or OracleConfig()
    osol = integrate_regular(sol, cfg)
    delta = phase_from_solution(sol.k, sol.l, osol)
    x_max = sol.k * osol.r[-1]
    shift = sol.l * math.pi / 2
    extra = math.floor((x_max - shift + delta) / math.pi) - math.floor((x_max - shift) / math.pi)
    branch = count_nodes(osol) - _free_nodes(sol.l, x_max) - extra
    if return_solution:
        return delta, branch, osol
    return delta, branch


def with_tolerance(cfg, factor):
    return replace(cfg, rtol=cfg.rtol * factor, atol=cfg.atol * factor)
