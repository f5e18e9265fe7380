"""
Repulsive singular potentials of the E/P product taxonomy.

Every potential is a product of three factors,

    g²U(s; r) = g²(R) · V_core(s; r) · V_tail(r),

where the coupling law g²(R), the core factor and the tail factor are each
either exponential (E) or power-law (P):

    coupling  E: (1/r0²) exp(-R/r0)        P: (1/r0²) (r0/R)^sigma0
    core      E: exp(r1 s / r)             P: ((r1 + r)/r)^s
    tail      E: exp(-r/r2)                P: (r2/(r2 + r))^sigma2

A class is named by its three letters in the order coupling, core, tail,
e.g. ``"EEP"``.  All evaluations go through log-space because the core
factor overflows double precision long before the interesting regime.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError

LAWS = ("E", "P")
CLASS_TAGS = tuple(a + b + c for a in LAWS for b in LAWS for c in LAWS)

# sigma2 lower bounds for power-law tails, keyed by (core, coupling) law.
_SIGMA2_BOUNDS = {
    ("E", "E"): 8.0,
    ("E", "P"): 8.0,
    ("P", "E"): 2.0,
    ("P", "P"): 4.0,
}


@dataclass(frozen=True)
class PotentialClass:
    """One member of the eight-class E/P taxonomy.

    Parameters
    ----------
    coupling_law, core_law, tail_law : {"E", "P"}
        Functional form of g²(R), V_core and V_tail.
    r0, r1, r2 : float
        Positive length scales of the coupling, core and tail factors.
    sigma0 : float
        Exponent of a power-law coupling (ignored for an E coupling).
    sigma2 : float
        Exponent of a power-law tail (ignored for an E tail).  Must exceed
        8 for the EEP/PEP classes, 2 for EPP and 4 for PPP.
    """

    coupling_law: str = "E"
    core_law: str = "E"
    tail_law: str = "E"
    r0: float = 1.0
    r1: float = 1.0
    r2: float = 1.0
    sigma0: float = 5.0
    sigma2: float = 10.0

    def __post_init__(self):
        for name in ("coupling_law", "core_law", "tail_law"):
            if getattr(self, name) not in LAWS:
                raise ParameterError(f"{name} must be 'E' or 'P', got {getattr(self, name)!r}")
        for name in ("r0", "r1", "r2"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.coupling_law == "P" and not self.sigma0 > 0:
            raise ParameterError(f"sigma0 must be positive, got {self.sigma0!r}")
        if self.tail_law == "P":
            bound = _SIGMA2_BOUNDS[(self.core_law, self.coupling_law)]
            if not self.sigma2 > bound:
                raise ParameterError(
                    f"class {self.tag} requires sigma2 > {bound:g}, got {self.sigma2!r}"
                )

    @classmethod
    def from_tag(cls, tag, **params):
        """Build a class from its three-letter tag, e.g. ``from_tag("PPP", sigma0=5)``."""
        tag = tag.upper()
        if tag not in CLASS_TAGS:
            raise ParameterError(f"unknown potential class {tag!r}; expected one of {CLASS_TAGS}")
        return cls(tag[0], tag[1], tag[2], **params)

    @property
    def tag(self):
        return self.coupling_law + self.core_law + self.tail_law


def _check_radius(r):
    r = np.asarray(r, dtype=float)
    if np.any(~(r > 0)):
        raise DomainError("potential evaluated at r <= 0 (the singular point)")
    return r


def log_coupling(cls, R):
    """Natural log of g²(R)."""
    R = float(R)
    if R < 0 or (R == 0 and cls.coupling_law == "P"):
        raise DomainError(f"coupling requires R > 0, got {R!r}")
    if cls.coupling_law == "E":
        return -2.0 * np.log(cls.r0) - R / cls.r0
    return -2.0 * np.log(cls.r0) + cls.sigma0 * np.log(cls.r0 / R)


def coupling(cls, R):
    """Coupling strength g²(R) in units of 1/length²."""
    return float(np.exp(log_coupling(cls, R)))


def log_core(cls, s, r):
    """ln V_core(s; r)."""
    if cls.core_law == "E":
        return cls.r1 * s / r
    return s * np.log1p(cls.r1 / r)


def log_tail(cls, r):
    """ln V_tail(r)."""
    if cls.tail_law == "E":
        return -r / cls.r2
    return -cls.sigma2 * np.log1p(r / cls.r2)


def log_potential(cls, s, R, r):
    """ln g²U(s; r) at matching distance R; vectorised over r."""
    if s < 0:
        raise DomainError(f"stage s must be nonnegative, got {s!r}")
    r = _check_radius(r)
    out = log_coupling(cls, R) + log_core(cls, s, r) + log_tail(cls, r)
    return out if out.ndim else float(out)


def potential_value(cls, s, R, r):
    """Linear value of g²U(s; r); ``inf`` where it exceeds double range."""
    with np.errstate(over="ignore"):
        out = np.exp(log_potential(cls, s, R, r))
    return out if np.ndim(out) else float(out)


def log_potential_derivatives(cls, s, r):
    """First and second r-derivatives of ln g²U(s; r).

    The coupling does not depend on r, so R drops out.
    """
    r = _check_radius(r)
    if cls.core_law == "E":
        d1 = -cls.r1 * s / r**2
        d2 = 2.0 * cls.r1 * s / r**3
    else:
        d1 = -s * cls.r1 / (r * (r + cls.r1))
        d2 = s * (1.0 / r**2 - 1.0 / (r + cls.r1) ** 2)
    if cls.tail_law == "E":
        d1 = d1 - 1.0 / cls.r2
    else:
        d1 = d1 - cls.sigma2 / (cls.r2 + r)
        d2 = d2 + cls.sigma2 / (cls.r2 + r) ** 2
    return d1, d2


def log_potential_ratio(cls, s, R, t):
    """ln[g²U(s; R t) / g²U(s; R)], exactly zero at t = 1.

    Written as differences of the factor logs so the coupling cancels and
    no precision is lost near the matching point.
    """
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0)):
        raise DomainError("t must be positive")
    if cls.core_law == "E":
        core = (cls.r1 * s / R) * (1.0 / t - 1.0)
    else:
        core = s * (np.log1p(cls.r1 / (R * t)) - np.log1p(cls.r1 / R))
    if cls.tail_law == "E":
        tail = -R * (t - 1.0) / cls.r2
    else:
        tail = -cls.sigma2 * (np.log1p(R * t / cls.r2) - np.log1p(R / cls.r2))
    return core + tail
