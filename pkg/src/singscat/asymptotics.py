"""
Large-R forms of the stage s(R), the local wave number squares and the
exponential-region discriminant for each potential class.

The closed forms are kept verbatim, prefactors included, and are meant
to be compared against the exact machinery of
:mod:`singscat.localwave` rather than trusted.  Several of them disagree
with the exact quantities by factors that grow with R; the comparison
helpers below make that visible instead of silently correcting it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad

from . import localwave
from .errors import DomainError, PreAsymptoticError
from .localwave import Region, as_region
from .matching import _as_triad, solve_stage


def _ln_power_ratio(cls, R):
    """ln(R^(σ0+σ2) / (r0^σ0 r2^σ2))."""
    return cls.sigma0 * math.log(R / cls.r0) + cls.sigma2 * math.log(R / cls.r2)


def log_stage_rhs(cls, k, triad, R):
    """ln of the right-hand side X in exp(r1 s / R) -> X."""
    triad = _as_triad(triad)
    r0, r2 = cls.r0, cls.r2
    lk = math.log(k * k * r0 * r0)
    avail = k * k - triad.lambda_sq / R**2
    tag = cls.tag
    if tag == "EEE":
        if avail <= 0:
            raise PreAsymptoticError("k²R² <= λ²")
        return math.log(avail * r0 * r0) + R * (1 / r0 + 1 / r2)
    if tag == "EEP":
        if avail <= 0:
            raise PreAsymptoticError("k²R² <= λ²")
        return math.log(avail * r0 * r0) + R / r0 + cls.sigma2 * math.log(R / r2)
    if tag == "PEE":
        return lk + cls.sigma0 * math.log(R / r0) + R / r2
    if tag in ("PEP", "PPP"):
        return lk + cls.sigma0 * math.log(R / r0) + cls.sigma2 * math.log(R / r2)
    if tag == "EPE":
        return lk + R * (1 / r0 + 1 / r2)
    if tag == "EPP":
        # this closed form carries no exp(R/r0) coupling factor
        return lk + cls.sigma2 * math.log(R / r2)
    if tag == "PPE":
        return lk + cls.sigma0 * math.log(R / r0) + R / r2
    raise DomainError(f"unknown class {tag}")


def asymptotic_stage(cls, k, triad, R):
    """s(R) from the class's large-R Master equation, s = (R/r1) ln X."""
    lx = log_stage_rhs(cls, k, triad, R)
    if lx <= 0:
        raise PreAsymptoticError(f"class {cls.tag}: right-hand side {math.exp(lx):.4g} <= 1 at R={R!r}")
    return R * lx / cls.r1


def _region_lambda_sq(region, sol):
    return localwave.region_lambda_sq(region, sol.triad)


def asymptotic_log_k_squared(cls, region, sol, t):
    """ln of the large-R local wave number square.

    EEE and EEP carry two-sign formulas valid in both regions; for the
    other classes only the exponential region is given, and the
    trigonometric region uses the class-independent limit
    k² - λ_tau²/(R²t²).
    """
    region = as_region(region)
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0)):
        raise DomainError("t must be positive")
    k, R = sol.k, sol.R
    r0, r2 = cls.r0, cls.r2
    lk2 = 2.0 * math.log(k)
    lkr = math.log(k * k * r0 * r0)
    u = 1.0 / t - 1.0
    tag = cls.tag
    if tag in ("EEE", "EEP"):
        if tag == "EEE":
            E = u * lkr + R * ((1 / r0 + 1 / r2) / t - (1 / r0 + t / r2))
        else:
            E = u * (lkr + R / r0 + cls.sigma2 * math.log(R / r2))
        c = _region_lambda_sq(region, sol) / (k * k * R * R * t * t)
        m = np.maximum(E, 0.0)
        # ∓k²{1 - exp(E) - c}
        inner = region.sign * ((1.0 - c) * np.exp(-m) - np.exp(E - m))
        with np.errstate(invalid="ignore", divide="ignore"):
            out = lk2 + m + np.log(np.where(inner > 0, inner, np.nan))
        return out if out.ndim else float(out)
    if region is Region.TAU:
        val = k * k - sol.triad.lambda_tau_sq / (R * R * t * t)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.log(np.where(val > 0, val, np.nan))
        return out if out.ndim else float(out)
    L0 = cls.sigma0 * math.log(R / r0)
    if tag == "PEE":
        out = lk2 + u * lkr + u * L0 + (R / r2) * (1 / t - t)
    elif tag == "PEP":
        out = lk2 + u * (lkr + _ln_power_ratio(cls, R)) - cls.sigma2 * np.log(t)
    elif tag == "EPE":
        out = -2 * math.log(r0) + (lkr + R * (1 / r0 + 1 / r2)) / t - R * (1 / r0 + t / r2)
    elif tag == "EPP":
        out = lk2 - cls.sigma2 * np.log(t) + u * (lkr + R / r0 + cls.sigma2 * math.log(R / r2))
    elif tag == "PPP":
        out = lk2 - cls.sigma2 * np.log(t) + u * (lkr + L0 + cls.sigma2 * math.log(R / r2))
    elif tag == "PPE":
        out = lk2 + u * (lkr + L0) + (R / r2) * (1 / t - t)
    else:
        raise DomainError(f"unknown class {tag}")
    return out if np.ndim(out) else float(out)


def asymptotic_k_squared(cls, region, sol, t):
    with np.errstate(over="ignore"):
        out = np.exp(asymptotic_log_k_squared(cls, region, sol, t))
    return out if np.ndim(out) else float(out)


def asymptotic_log_abs_discriminant_eps(cls, sol, t):
    """ln|p_eps| from the closed large-R formula (the sign is always minus)."""
    t = np.asarray(t, dtype=float)
    if np.any(~((t > 0) & (t < 1))):
        raise DomainError("asymptotic discriminant is defined for 0 < t < 1")
    k, R = sol.k, sol.R
    r0, r2 = cls.r0, cls.r2
    ln16 = math.log(16.0)
    lt = np.log(t)
    u = 1.0 / t - 1.0
    tag = cls.tag
    if tag == "EEE":
        out = (math.log(R / k) - ln16 + 2 * np.log((1 / r0 + 1 / r2) / t**2 + 1 / r2)
               - 0.5 * R * (u / r0 + (1 / t - t) / r2))
    elif tag == "EEP":
        sg = cls.sigma2
        out = (-ln16 - u * math.log(k * r0) + (sg / 2 - 4) * lt - math.log(k * R)
               + (sg / 2 - 3) * math.log(r2 / R) - R * u / (2 * r0))
    elif tag == "PEE":
        out = (-ln16 + 2 * np.log(1 / t**2 + 1) - math.log(k * R) + 2 * math.log(R / r0)
               - u * math.log(k * r0) + 0.5 * cls.sigma0 * u * math.log(r0 / R)
               - R * (1 / t - t) / (2 * r2))
    elif tag == "PEP":
        L = _ln_power_ratio(cls, R)
        if L <= 0:
            raise PreAsymptoticError("logarithmic prefactor is not positive")
        out = -ln16 + (cls.sigma2 / 2 - 4) * lt - math.log(k * R) + math.log(L) - 0.5 * u * L
    elif tag == "EPE":
        a = 1 / r0 + 1 / r2
        out = -ln16 + 2 * math.log(a) + math.log(r0 * R) - 4 * lt - 0.5 * R * a / t
    elif tag == "EPP":
        out = -ln16 + math.log(R / (r0 * r0 * k * k)) - 4 * lt - R * u / r0
    elif tag == "PPP":
        L = _ln_power_ratio(cls, R)
        if L <= 0:
            raise PreAsymptoticError("logarithmic prefactor is not positive")
        out = (-ln16 + math.log(L) - math.log(k * R) + 0.5 * (cls.sigma2 - 4) * lt
               - 0.5 * u * (math.log(k * k * r0 * r0) + L))
    elif tag == "PPE":
        out = (-ln16 - math.log(k * R) + 2 * math.log(R / r2) + 2 * np.log(1 / t**2 + 1)
               - R * (1 / t - t) / r2)
    else:
        raise DomainError(f"unknown class {tag}")
    return out if np.ndim(out) else float(out)


def asymptotic_discriminant_eps(cls, sol, t):
    out = -np.exp(asymptotic_log_abs_discriminant_eps(cls, sol, t))
    return out if np.ndim(out) else float(out)


def asymptotic_discriminant_tau(sol, t):
    """Class-independent large-R limit -3λ_tau² / (2k²R²t⁴)."""
    t = np.asarray(t, dtype=float)
    out = -3.0 * sol.triad.lambda_tau_sq / (2.0 * sol.k**2 * sol.R**2 * t**4)
    return out if out.ndim else float(out)


def asymptotic_convergence_integral_tau(sol, t_end=math.inf):
    """R ∫_1^t_end |p_tau| with the large-R discriminant, by quadrature."""
    val, _ = quad(lambda t: abs(asymptotic_discriminant_tau(sol, t)), 1.0, t_end, epsabs=1e-13, epsrel=1e-12)
    return sol.R * val


_ORDER_LAWS = {
    "EEE": ("R^2/(r0 r2)", lambda c, R: R * R / (c.r0 * c.r2)),
    "EEP": ("R^2/(r0 r1)", lambda c, R: R * R / (c.r0 * c.r1)),
    "PEE": ("R^2/(r1 r2)", lambda c, R: R * R / (c.r1 * c.r2)),
    "PEP": ("R/r1", lambda c, R: R / c.r1),
    "EPE": ("R^2", lambda c, R: R * R),
    "EPP": ("R/r1", lambda c, R: R / c.r1),
    "PPP": ("R/r1", lambda c, R: R / c.r1),
    "PPE": ("R^2/(r1 r2)", lambda c, R: R * R / (c.r1 * c.r2)),
}


def order_law(cls):
    """(label, function) of the stated growth order of s(R)."""
    return _ORDER_LAWS[cls.tag]


def order_ratio(cls, k, triad, R):
    """Exact s(R) divided by the class's stated order function."""
    return solve_stage(cls, k, triad, R) / _ORDER_LAWS[cls.tag][1](cls, R)


@dataclass(frozen=True)
class AsymptoticProfile:
    """The large-R evaluators bound to one potential class."""

    cls: object
    stage: Callable
    log_k_squared: Callable
    log_abs_discriminant_eps: Callable
    order_label: str
    order_function: Callable


def asymptotic_profile(cls):
    label, fn = _ORDER_LAWS[cls.tag]
    return AsymptoticProfile(
        cls,
        lambda k, triad, R: asymptotic_stage(cls, k, triad, R),
        lambda region, sol, t: asymptotic_log_k_squared(cls, region, sol, t),
        lambda sol, t: asymptotic_log_abs_discriminant_eps(cls, sol, t),
        label,
        lambda R: fn(cls, R),
    )


def discriminant_log_deviation(sol, t):
    """|ln|p_eps exact| - ln|p_eps asymptotic|| at t (a signed-magnitude metric)."""
    _, exact = localwave.log_abs_discriminant(Region.EPS, sol, t)
    asym = asymptotic_log_abs_discriminant_eps(sol.cls, sol, t)
    out = np.abs(exact - asym)
    return out if np.ndim(out) else float(out)


def comparison_rows(sol, t):
    """Report rows (class, R, t, exact p_eps, asymptotic p_eps, log deviation)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    exact = localwave.discriminant(Region.EPS, sol, t)
    asym = asymptotic_discriminant_eps(sol.cls, sol, t)
    dev = discriminant_log_deviation(sol, t)
    return [
        (sol.cls.tag, sol.R, float(a), float(b), float(c), float(d))
        for a, b, c, d in zip(t, np.atleast_1d(exact), np.atleast_1d(asym), np.atleast_1d(dev))
    ]


def asymptotic_wavefunction(sol, t_far=None):
    """Leading-term wave function: the two order-0 terms matched at t = 1."""
    from .series import solve_series

    return solve_series(sol, cutoff=(0, 0), t_far=t_far)
