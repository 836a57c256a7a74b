"""
Enhanced delay: hysteresis loops whose delays keep growing
===========================================================

x' = (1 - x^2)(x - y), y' = eps x. Inside the strip |x| < 1 the orbit
alternates between the lines x = 1 and x = -1 and lingers each time on the
repulsive part (|y| > 1) longer than before. We integrate in the chart
x = tanh u, where the lines x = +-1 sit at infinity and the approach to them
is not lost to rounding.
"""
import numpy as np

from slowfast.analysis.crossings import a_n_growth, crossing_sequences, simulate_strip
from slowfast.analysis.delay import delay_report, verify_enhanced_delay
from slowfast.analysis.lyapunov import lyapunov_series

eps = 0.01
traj = simulate_strip(0.5, 0.0, eps, n_crossings=12)
print(f"{len(traj)} samples up to t={traj.t[-1]:.0f}, {len(traj.events)} events")

# y at the n-th crossing of x = 0 is (-1)^n a_n, and a_n^2 equals the
# Lyapunov function w there.
rep = crossing_sequences(traj, eps)
print(" n        t_n        a_n     a_n^2-w   ln(1-xi^2)")
for k in range(len(rep) - 1):
    print(f"{rep.n[k]:2d} {rep.t_n[k]:10.2f} {rep.a_n[k]:10.6f} {rep.res_w_tn[k]:9.1e} {rep.log_one_minus_xi2[k]:11.1f}")

fit = a_n_growth(rep)
print("increments a_{n+1} - a_n:", np.round(fit.increments, 6))

series = lyapunov_series(traj, eps, kind="w")
print(f"w grows from {series.value[0]:.3f} to {series.value[-1]:.1f}; largest drop {series.worst_decrease:.1e}")

# Residence within delta of the repulsive parts of x = +-1
report = delay_report(traj, "any", 0.05)
for p in report.passes[:8]:
    print(f"{p.branch}: enter t={p.enter_t:9.2f}  y={p.y_enter:+.3f}  stays {p.duration:8.2f}")

wit = verify_enhanced_delay(0.5, 0.0, eps, delta=1e-20, T=500.0)
print(f"first pass staying within 1e-20 for more than 500: #{wit.pass_index}, {wit.witness.duration:.1f}")
