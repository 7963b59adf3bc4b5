"""How visible is a regularized cloak, and how does that change with rho?

Solves the small-inclusion problem for a shell current at several values of
the regularization parameter, measures the difference field on the annulus
2 < |x| < 3 and fits the exponent of V in rho.  Then prints the normalized
low-frequency column V * omega / rho^3 for two source shapes.
"""

import warnings

from maxcloak.errors import IllConditionedModeWarning
from maxcloak.sources import PatchCurrent, ShellCurrent
from maxcloak.visibility import omega_regime_report, rho_scaling_sweep, spread

warnings.simplefilter("ignore", IllConditionedModeWarning)

sweep = rho_scaling_sweep(1.0, (0.1, 0.05, 0.025, 0.0125))
print("rho        V            n_max  self-consistency")
for rec in sweep.records:
    print(f"{rec.rho:<10g} {rec.V:<12.5e} {rec.n_max:<6d} {rec.self_consistency:.1e}")
print(f"fitted exponent: {sweep.slope:.3f}   pair ratios: {[round(r, 2) for r in sweep.ratios]}")

for name, src in (("shell", ShellCurrent()), ("patch", PatchCurrent())):
    rows = omega_regime_report(0.05, (0.01, 0.1, 0.2, 0.5, 1.0), source=src)
    print(f"\n{name} source, rho = 0.05")
    print("omega   V            V*omega/rho^3")
    for r in rows:
        print(f"{r.omega:<7g} {r.V:<12.4e} {r.low:.4e}")
    print(f"max/min of the low column over omega >= 0.1: {spread([r.low for r in rows[1:]]):.0f}")
