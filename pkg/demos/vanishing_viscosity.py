"""L1 distance between viscous and entropy solutions as eps -> 0."""

from mfgclaw.claw import Grid1D
from mfgclaw.presets import burgers, cubic
from mfgclaw.viscous import vanishing_viscosity_study

eps = [0.1, 0.05, 0.025, 0.0125]
for model in (burgers(), cubic()):
    rep = vanishing_viscosity_study(model.flux, model.sigma0.profile, eps, 1.0, Grid1D(-2, 2, 800))
    print(f"{model.name} (reference: {rep.reference}, monotone: {rep.monotone})")
    for r in rep.rows:
        print(f"  eps={r.epsilon:<7} L1={r.l1_distance:.4f}  mass defect={r.mass_defect:.1e}")
