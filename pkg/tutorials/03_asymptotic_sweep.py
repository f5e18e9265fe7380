"""
Follow the double limit g² -> 0, s -> infinity along growing R.

For each class the exact stage is compared with its large-R closed form,
and the exact exponential-region discriminant with its closed large-R
form at t = 0.5.  A shrinking log-deviation means the closed form is
approached; a growing one flags a formula that does not describe the
exact quantity.

Run with ``python3 tutorials/03_asymptotic_sweep.py``.
"""

from singscat import CLASS_TAGS, PotentialClass, lambda_triad, matching_solution
from singscat import asymptotics as A
from singscat.errors import PreAsymptoticError


def unit_class(tag):
    kw = {"sigma0": 5.0}
    if tag[2] == "P":
        kw["sigma2"] = 10.0 if tag[1] == "E" else 5.0
    return PotentialClass.from_tag(tag, **kw)


print(f"{'class':5} {'R':>6} {'g2':>11} {'s':>11} {'s_asym/s':>9} {'log dev p(0.5)':>14}")
for tag in CLASS_TAGS:
    cls = unit_class(tag)
    for R in (10.0, 20.0, 40.0, 80.0):
        sol = matching_solution(cls, 1.0, 0, R)
        try:
            ratio = A.asymptotic_stage(cls, 1.0, lambda_triad(0), R) / sol.s
        except PreAsymptoticError:
            ratio = float("nan")
        dev = A.discriminant_log_deviation(sol, 0.5)
        print(f"{tag:5} {R:6g} {sol.g2:11.4e} {sol.s:11.4f} {ratio:9.4f} {dev:14.4f}")
