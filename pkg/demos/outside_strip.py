"""
Orbits outside the strip are asymptotic to y = x
=================================================

Starting on the diagonal with x0 > 1, the orbit moves off to infinity just
above the line y = x. The gap follows the quasi-steady value
eps x / (x^2 - 1) once the initial layer is over.
"""
import numpy as np

from slowfast.analysis.asymptote import asymptote_check
from slowfast.ode import ToleranceConfig

eps = 0.1
rep = asymptote_check(3.0, eps, horizon=40.0)
print(f"alpha0={rep.alpha0:.4f}  1/(2 alpha0)={rep.half_bound:.4f}  1/alpha0={rep.full_bound:.4f}")
print(f"sup gap {rep.sup_gap:.5f}, min gap {rep.min_gap:.1e}, reached t={rep.t_end:g} ({rep.termination})")

for t in (1, 5, 10, 20, 30, 40):
    i = min(np.searchsorted(rep.t, t), len(rep.t) - 1)
    x = 3.0 * np.exp(eps * rep.t[i])
    print(f"t={rep.t[i]:6.2f}  gap={rep.gap[i]:.3e}  eps x/(x^2-1)={eps * x / (x * x - 1):.3e}")

# The relaxation rate of the gap grows like x^2, so an explicit integrator
# takes ever smaller steps; the report says how far the budget went.
far = asymptote_check(3.0, eps, horizon=200.0, tol=ToleranceConfig(max_steps=100_000))
print(f"horizon 200 with 1e5 steps: stopped at t={far.t_end:.1f} ({far.termination})")
