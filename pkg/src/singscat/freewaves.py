"""Riccati-Bessel free waves and phase-shift extraction by asymptotic matching."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import spherical_jn, spherical_yn


def riccati_jn(l, x):
    """x j_l(x) and its x-derivative."""
    j = spherical_jn(l, x)
    dj = spherical_jn(l, x, derivative=True)
    return x * j, j + x * dj


def riccati_yn(l, x):
    """x y_l(x) and its x-derivative; tends to -cos(x - lπ/2)."""
    y = spherical_yn(l, x)
    dy = spherical_yn(l, x, derivative=True)
    return x * y, y + x * dy


def phase_from_values(k, l, r, u, du):
    """Principal-value phase shift from (u, du/dr) at radius r.

    Solves u ∝ ĵ_l(kr) cos δ - n̂_l(kr) sin δ, the combination that behaves
    like sin(kr - lπ/2 + δ).  Returns δ in (-π/2, π/2].
    """
    jh, djh = riccati_jn(l, k * r)
    nh, dnh = riccati_yn(l, k * r)
    num = u * k * djh - du * jh
    den = u * k * dnh - du * nh
    delta = math.atan(num / den) if den != 0 else math.pi / 2
    if delta <= -math.pi / 2:
        delta += math.pi
    return delta


def free_wave(k, l, r):
    """Regular free solution normalised to sin(kr - lπ/2) asymptotically."""
    return riccati_jn(l, k * np.asarray(r, dtype=float))[0]


def wrap_phase(delta):
    """Map an angle onto (-π/2, π/2]."""
    out = (delta + math.pi / 2) % math.pi - math.pi / 2
    return math.pi / 2 if out == -math.pi / 2 else out
