"""Two-variable model: steady states and phase portraits for fig1a and fig1b.

Run from the repository root::

    python demos/reduced_model.py [outdir]
"""

# %%
import sys
from pathlib import Path

import numpy as np

from oncolattice import Params2D, classify_2d, phase_portrait, write_svg
from oncolattice.equilibria import infected_only_bound

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
out.mkdir(exist_ok=True)

# %% Nondimensional constants from the default table; only alpha changes.
r, theta, gamma = 0.531107, 2.52908, 1.29362
for alpha in (10.0, 1.0, 0.1):
    p = Params2D(r, alpha, theta, gamma)
    print(f"alpha = {alpha}")
    for st, v in classify_2d(p):
        print(f"  {st.kind:14s} ({st.x:.5f}, {st.y:.5f})  {v}")

# %% The tumour-only state loses stability once theta exceeds alpha*gamma.
alphas = np.linspace(0.5, 5.0, 10)
print("theta threshold alpha*gamma:", np.round(alphas * gamma, 3))
print("infected-only bound at alpha=0.1, gamma=0.3:", infected_only_bound(Params2D(r, 0.1, 0.9, 0.3)))

# %% Phase portraits
for name, alpha in (("fig1a", 10.0), ("fig1b", 1.0)):
    pp = phase_portrait(Params2D(r, alpha, theta, gamma), resolution=20)
    print(name, "trajectory endpoints spread:", np.ptp(pp.endpoints, axis=0))
    write_svg(pp, out / f"{name}.svg", title=name)
