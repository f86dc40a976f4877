"""Local model with oxygen-dependent infection and death rates.

Compares a well-oxygenated and a hypoxic tumour site, then locates the
interior steady state of the nondimensional system.

    python demos/local_oxygen.py [outdir]
"""

# %%
import sys
from pathlib import Path

from oncolattice import (INITIAL_C, INITIAL_N, INITIAL_U, DEFAULT_PARAMS, LocalModel, Scenario, Sigmoid, interior_3d,
                         nondimensionalize, run_timeseries, tumour_dominant_3d, write_csv, write_svg)

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
out.mkdir(exist_ok=True)

theta = Sigmoid(0.005115, 1.0, 0.08)
gamma = Sigmoid(0.1, 0.9, 0.008)
y0 = (INITIAL_U, INITIAL_N, INITIAL_C)

# %% Same site with normal and reduced oxygen supply.
for label, phi in (("oxygenated", DEFAULT_PARAMS.phi), ("hypoxic", DEFAULT_PARAMS.phi / 20)):
    p = DEFAULT_PARAMS.replace(theta=theta, gamma=gamma, phi=phi)
    tab = run_timeseries(Scenario(f"local_{label}", LocalModel(p), y0, 200.0, output_step=1.0))
    u, n, c = tab.data[-1, 1:]
    print(f"{label:10s} day 200: u={u:10.1f}  n={n:10.1f}  c={c:7.3f}")
    write_csv(tab, out / f"local_{label}.csv")
    write_svg(tab, out / f"local_{label}.svg", title=label)

# %% Steady states in scaled variables.
nd = nondimensionalize(DEFAULT_PARAMS.replace(theta=theta, gamma=gamma))
st, v = tumour_dominant_3d(nd)
print("tumour dominant:", st.point, v)
st, v = interior_3d(nd, [0.1, 0.05, 0.4])
print("interior:", st.point, v)
