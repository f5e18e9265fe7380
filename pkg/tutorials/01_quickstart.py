"""
Quickstart: solve one scattering problem.

A potential class is named by a three-letter tag (coupling, core, tail),
each letter E for exponential or P for power law.  Fixing the wavenumber k,
the angular momentum l and the matching distance R determines the stage s
and the coupling g² through the Master equation.  The two-region series is
then matched at t = r/R = 1 and the phase shift is read off far outside.

Run with ``python3 tutorials/01_quickstart.py``.
"""

import numpy as np

from singscat import PotentialClass, Region, k_squared, matching_solution, solve_series, wavefunction

cls = PotentialClass.from_tag("EEE")  # unit lengths r0 = r1 = r2 = 1
sol = matching_solution(cls, k=1.0, l=0, R=5.0)
print(f"stage s = {sol.s:.6f}, coupling g2 = {sol.g2:.4e}")

# Both local wave number squares meet at 1/(8R²) for every class and l.
for region in Region:
    print(f"K^2({region.name}, t=1) = {k_squared(region, sol, 1.0):.6e}  (1/8R^2 = {1 / (8 * sol.R**2):.6e})")

# A high cutoff is needed for a converged partial sum at moderate R.
res = solve_series(sol, cutoff=(30, 30))
print(f"phase shift = {res.phase_shift:+.8f} rad, branch {res.branch}")

t = np.array([0.9, 1.0, 1.5, 2.0, 3.0])
for ti, ui in zip(t, wavefunction(res, t)):
    print(f"  u({ti:.1f}) = {ui:+.6e}")
