"""
Canard explosion in a van der Pol oscillator
=============================================

eps x' = y - x^3/3 - x^2, y' = c - x. The equilibrium (c, f(c)) loses
stability at c = 0. Just below, a small cycle appears and within an
exponentially thin range of c it grows into the relaxation cycle.
"""
from slowfast.canard import attractor_summary, canard_bisect, reference_amplitude

eps = 0.1
short = dict(transient=5 / eps, window=5 / eps)
print(f"relaxation amplitude at eps={eps}: {reference_amplitude(eps):.4f}")
for c in (0.05, 0.001, -0.005, -0.012, -0.013, -0.014, -0.05, -0.5):
    s = attractor_summary(eps, c, **short)
    print(f"c={c:+.3f}  amplitude={s.amplitude:.4f}  {s.cls}")

scan = canard_bisect(eps, (-0.2, 0.05), tol_c=1e-8, **short)
lo, hi = scan.bracket
print(f"half amplitude crossed between c={lo:.10f} and c={hi:.10f} ({len(scan.amplitudes)} runs)")
