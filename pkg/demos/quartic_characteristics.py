"""Quartic flux: characteristics focus at (0, 1), two shocks form and merge.

For xi = 2 the merged shock does not open a fan; for xi = 6 the state left
of the merger lies below the tangency point r1 = -5/3 and a rarefaction
wedge appears.
"""

import numpy as np

from mfgclaw.claw import QUARTIC, Grid1D, godunov, track_shock, build_quartic_profile

for xi in (2.0, 6.0):
    prof, lm = build_quartic_profile(xi)
    print(f"xi={xi}: focusing {lm.focusing_point}, t_xi={lm.t_xi}, t*={lm.t_star:.6f}, "
          f"sigma*={lm.sigma_star:.5f}, wedge={lm.wedge}")

prof, lm = build_quartic_profile(2.0)
grid = Grid1D(-1.5, 3.0, 8000)
times = lm.t_xi + np.arange(0.0, 1.01, 0.1)
field = godunov(QUARTIC, prof, grid, times[-1], times=times)
ts, xs, _, _ = track_shock(field, QUARTIC, 1.0, lm.t_xi + 0.1, window=(0.3, 1.2))
speed = np.polyfit(ts - lm.t_xi, xs, 3)[2]
print(f"initial speed of the second shock: tracked {speed:.5f}, Rankine-Hugoniot {lm.s2_initial_speed:.5f}")
