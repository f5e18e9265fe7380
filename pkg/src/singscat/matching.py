"""
The angular-momentum triad and the Master equation

    k²R² - R² g²U(s; R) - λ² = 0,

which ties the matching distance R to the singularity stage s.  R is the
canonical independent variable: s(R) has a closed form, and the inverse
R(s) is found by a bracketed root search.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from . import potentials
from .errors import DomainError, NegativeStageError, NoSolutionError
from .potentials import PotentialClass

log = logging.getLogger(__name__)

RESIDUAL_RTOL = 1e-12


@dataclass(frozen=True)
class AngularTriad:
    """Auxiliary orbital angular momenta for partial wave ``l``.

    ``lambda_eps_sq`` is used in the exponential region, ``lambda_tau_sq``
    in the trigonometric one and their mean ``lambda_sq`` in the Master
    equation.  Both differences to the mean are exactly 1/8.
    """

    l: int
    lambda_eps_sq: float
    lambda_tau_sq: float
    lambda_sq: float


def lambda_triad(l):
    if int(l) != l or l < 0:
        raise DomainError(f"l must be a nonnegative integer, got {l!r}")
    l = int(l)
    eps = (l + 0.5) ** 2
    tau = float(l * (l + 1))
    return AngularTriad(l, eps, tau, 0.5 * (eps + tau))


def _as_triad(l_or_triad):
    if isinstance(l_or_triad, AngularTriad):
        return l_or_triad
    return lambda_triad(l_or_triad)


@dataclass(frozen=True)
class MatchingSolution:
    """A point (k, l, R, s, g²) on the Master-equation surface.

    ``cls=None`` denotes the potential switched off entirely; such objects
    are only used as calibration inputs (free waves) and do not satisfy
    the Master equation.
    """

    k: float
    triad: AngularTriad
    cls: PotentialClass | None
    R: float
    s: float
    g2: float

    @property
    def l(self):
        return self.triad.l

    @property
    def potential_at_R(self):
        """g²U(s; R), taken from the Master equation as k² - λ²/R²."""
        if self.cls is None:
            return 0.0
        return self.k**2 - self.triad.lambda_sq / self.R**2

    @property
    def gap(self):
        """k² - g²U(s; R); equals λ²/R² exactly on the Master surface."""
        if self.cls is None:
            return self.k**2
        return self.triad.lambda_sq / self.R**2

    def residual(self):
        return master_residual(self.cls, self.k, self.triad, self.R, self.s)

    def check(self, rtol=1e-10):
        """Raise if the Master residual exceeds ``rtol * max(1, k²R²)``."""
        if self.cls is None:
            return self
        res = self.residual()
        if not abs(res) <= rtol * max(1.0, (self.k * self.R) ** 2):
            raise NoSolutionError(
                f"Master residual {res:.3e} too large at R={self.R!r}", residual=res
            )
        return self

    def with_triad(self, triad):
        """Copy with a different triad; used for fault-injection checks."""
        return replace(self, triad=triad)


def master_residual(cls, k, triad, R, s):
    """k²R² - R² g²U(s; R) - λ², with the sign exactly as written."""
    triad = _as_triad(triad)
    if not R > 0:
        raise DomainError(f"R must be positive, got {R!r}")
    with np.errstate(over="ignore"):
        pot = math.exp(min(2.0 * math.log(R) + potentials.log_potential(cls, s, R, R), 709.0))
    return (k * R) ** 2 - pot - triad.lambda_sq


def _log_stage_ratio(cls, k, triad, R):
    """ln[(k² - λ²/R²) / (g²(R) V_tail(R))]."""
    if not R > 0:
        raise DomainError(f"R must be positive, got {R!r}")
    if not (k * R) ** 2 > triad.lambda_sq:
        raise NoSolutionError(
            f"k²R² = {(k * R) ** 2:.6g} does not exceed λ² = {triad.lambda_sq:.6g}",
            R=R,
        )
    avail = k**2 - triad.lambda_sq / R**2
    return math.log(avail) - potentials.log_coupling(cls, R) - potentials.log_tail(cls, R)


def solve_stage(cls, k, triad, R):
    """Exact s(R) from the Master equation.

    E-core: s = (R/r1) ln(ratio); P-core: s = ln(ratio) / ln(1 + r1/R).
    """
    triad = _as_triad(triad)
    lr = _log_stage_ratio(cls, k, triad, R)
    if lr < 0:
        raise NegativeStageError(
            f"class {cls.tag} at R={R!r} needs a negative stage (log ratio {lr:.6g})",
            R=R,
            log_ratio=lr,
        )
    if cls.core_law == "E":
        return R * lr / cls.r1
    return lr / math.log1p(cls.r1 / R)


def _log_residual(cls, k, triad, s, R):
    # Same sign as master_residual wherever kR > λ, but O(1)-scaled and finite.
    if (k * R) ** 2 <= triad.lambda_sq:
        return -1.0
    return math.log((k * R) ** 2 - triad.lambda_sq) - (
        2.0 * math.log(R) + potentials.log_potential(cls, s, R, R)
    )


def solve_matching_radius(cls, k, triad, s, *, r_lo=1e-3, r_hi=1e6, per_decade=40):
    """R(s): the matching distance at which the Master equation holds.

    The bracket comes from a geometric scan of ``[r_lo, r_hi] / k``; the
    root is then polished by Brent's method (bisection safeguarding secant
    and inverse-quadratic steps).
    """
    triad = _as_triad(triad)
    if not s > 0:
        raise DomainError(f"stage must be positive, got {s!r}")
    n = int(per_decade * math.log10(r_hi / r_lo)) + 1
    grid = np.geomspace(r_lo, r_hi, n) / k
    f = np.array([_log_residual(cls, k, triad, s, R) for R in grid])
    idx = np.flatnonzero((f[:-1] < 0) & (f[1:] >= 0))
    if idx.size == 0:
        raise NoSolutionError(
            f"no sign change of the Master residual for s={s!r} in the scanned range",
            R_range=(grid[0], grid[-1]),
            residual_ends=(
                master_residual(cls, k, triad, grid[0], s),
                master_residual(cls, k, triad, grid[-1], s),
            ),
        )
    if idx.size > 1:
        log.warning("Master residual changes sign %d times; taking the innermost root", idx.size)
    a, b = grid[idx[0]], grid[idx[0] + 1]
    R = brentq(lambda x: _log_residual(cls, k, triad, s, x), a, b, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=200)
    res = master_residual(cls, k, triad, R, s)
    if not abs(res) <= RESIDUAL_RTOL * max(1.0, (k * R) ** 2):
        # Brent stops on the bracket width; one Newton step on the log form
        # takes the last ulp or two.
        h = 1e-7 * R
        df = (_log_residual(cls, k, triad, s, R + h) - _log_residual(cls, k, triad, s, R - h)) / (2 * h)
        R = R - _log_residual(cls, k, triad, s, R) / df
    return R


def matching_solution(cls, k, l, R):
    """MatchingSolution at a given R with s from the closed form."""
    triad = _as_triad(l)
    s = solve_stage(cls, k, triad, R)
    return MatchingSolution(k, triad, cls, float(R), s, potentials.coupling(cls, R)).check()


def matching_solution_from_stage(cls, k, l, s):
    """MatchingSolution at a given stage s, solving for R."""
    triad = _as_triad(l)
    R = solve_matching_radius(cls, k, triad, s)
    return MatchingSolution(k, triad, cls, R, float(s), potentials.coupling(cls, R)).check()


def free_solution(k, l, R):
    """Potential-free stand-in used for calibration of the series machinery."""
    return MatchingSolution(float(k), _as_triad(l), None, float(R), 0.0, 0.0)
