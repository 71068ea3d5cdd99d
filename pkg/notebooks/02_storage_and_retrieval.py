# %% [markdown]
# # Storage and retrieval in the ideal medium
#
# A matched signal/control pair with two-pulse area 2 pi writes a spin wave
# at kappa0 x1 = ln(theta_s/theta_c). A later lone control pulse reads it
# out, and the signal it carries is written back further along, displaced by
# the phase lag ln((tau1+tau2)/(tau1-tau2)). Here the analytic solution and
# the Maxwell-Bloch solver are compared on both steps.

# %%
import math

import numpy as np

from lambdamem.analysis import (RunPlan, Variant, analytic_displacement, analytic_storage_location,
                                locate_imprint, run_displacement, storage_location)
from lambdamem.core import SpectralParameter
from lambdamem.ist import (SolitonSolution, density_field, retrieval_norming_constant,
                           storage_norming_constant)

# %% [markdown]
# ## Analytic imprint before and after retrieval

# %%
lam1, lam2 = SpectralParameter(0.0, 1.0), SpectralParameter(0.0, 0.5)
init1 = storage_norming_constant(0.05 * math.pi)
z = np.linspace(0, 12, 601)
before = density_field(SolitonSolution.build([lam1], [init1]), z)
after = density_field(SolitonSolution.build([lam1, lam2], [init1, retrieval_norming_constant(0.5, 20.0)]), z)
x1, x2 = locate_imprint(before).location, locate_imprint(after).location
print(f"imprint at {x1:.4f}, after retrieval at {x2:.4f}, shift {x2 - x1:.4f} (ln 3 = {math.log(3):.4f})")

# %% [markdown]
# ## Numeric storage locations

# %%
plan = RunPlan(z_length=10.0)
print("theta_c/pi  numeric  analytic")
for frac in (0.02, 0.05, 0.1, 0.2, 0.5):
    th = frac * math.pi
    print(f"{frac:9.2f} {storage_location(th, Variant(), plan):8.4f} {analytic_storage_location(th, Variant()):9.4f}")

# %% [markdown]
# ## Numeric displacement

# %%
print("tau2  numeric  analytic")
for tau2 in (0.3, 0.5, 0.7):
    run = run_displacement(tau2, Variant(), plan)
    print(f"{tau2:4.1f} {run.displacement:8.4f} {analytic_displacement(tau2, Variant()):9.4f}")
