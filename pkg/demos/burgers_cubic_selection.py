"""Where does the entropy solution pick a Nash equilibrium?

Burgers data 0 -> 1 opens a rarefaction fan: for means inside (0, T) the
fixed-point relation has no solution at all.  Cubic data -1 -> 1 produces a
shock followed by a fan: inside (T/4, T) an equilibrium exists, yet the
entropy value is not it.
"""

import numpy as np

from mfgclaw.presets import burgers, cubic
from mfgclaw.selection import region_scan

T = 1.0
x = np.linspace(-0.5, 1.5, 401)
for model in (burgers(), cubic()):
    rep = region_scan(model, T, x)
    print(f"{model.name}: tol={rep.tol:.1e}")
    for cls, lo, hi in rep.regions:
        print(f"  {cls:<15} [{lo:+.3f}, {hi:+.3f}]")
    mid = rep.entries[len(x) // 2]
    print(f"  at x={mid.x:.2f}: entropy value {mid.sigma_entropy:.4f}, equilibria {mid.equilibria}")
