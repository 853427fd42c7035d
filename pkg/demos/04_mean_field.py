"""
Mean-field trajectories in both regimes
=======================================

Implicit-equation solutions, the overload ordering and a forward RK4
cross-check.
"""

import numpy as np

from influcomp.analytic import (InitialState, corollary_closed_form, default_grid,
                                full_trajectory, integrate_ode, post_overload, pre_overload,
                                theorem4_check)

s1 = InitialState(40, 16, 24)
t = np.array([40, 100, 400, 2000, 1e4, 1e6])

# Without overload the stronger influence (b=2) takes everything eventually.
plain = pre_overload(1, 2, s1, t)
for ti, share in zip(t, plain.share2):
    print(f"t={ti:>9.0f}  I2 share {share:.4f}")
print("closed form at t=100:", corollary_closed_form(0.5, s1, 100.0)[0])

# With equal powers the initial split is frozen.
print("a=b share at t=1e4:", pre_overload(1, 1, s1, [1e4]).share1[0])

# Overload at t0: the weaker one does better, the stronger one worse, at every t.
rep = theorem4_check(1, 2, 10, s1, default_grid(40, 4000))
print(f"ordering violations: {rep.violations}, plain I1 {rep.plain.share1[-1]:.4f} "
      f"vs overloaded I1 {rep.overloaded.share1[-1]:.4f}")

# Shares freeze 1/mu after onset.
post = post_overload(1, 2, 10, InitialState(100, 30, 70), [100.05, 100.1, 200, 1000])
print("post-overload I1 shares:", post.share1.round(6))

# Onset later in the run, anchored at the mean-field state.
for t_c in (50, 256, 711):
    traj = full_trajectory(1, 2, InitialState(40, 32, 8), default_grid(40, 2000), mu=10, t_c=t_c)
    print(f"S3 with onset {t_c}: final I1 share {traj.share1[-1]:.3f}")

# RK4 on the rate equations agrees with the implicit solutions.
grid = np.linspace(40, 400, 10)
ode = integrate_ode(1, 2, s1, 400, t_out=grid)
print("max relative ODE gap:", np.max(np.abs(ode.x1 - pre_overload(1, 2, s1, grid).x1) / ode.x1))
