# %% [markdown]
# # Absorption and refraction under Doppler broadening
#
# The medium enters the soliton solutions only through the complex rate
# kappa1 + i delta1, a Lorentzian averaged over the Gaussian detuning
# distribution. This notebook tabulates both against the width tau/T2* and
# the mean detuning, and checks the Gauss-Hermite values against the Voigt
# closed form.

# %%
import math

import numpy as np
from scipy.special import wofz

from lambdamem.core import DopplerSpec, SpectralParameter
from lambdamem.doppler import broadening_coefficients, coefficient_table, kappa_width_derivative_sign

LAM = SpectralParameter(0.0, 1.0)

# %% [markdown]
# ## Width dependence at three mean detunings

# %%
widths = [0.0, 0.5, 1.0, 2.0, 4.0, 16.0]
means = [0.0, 1.3, -2.5]
table = coefficient_table(widths, means)
print("width   mean   kappa1   delta1")
for row in table:
    print("{:5.1f} {:6.1f} {:8.4f} {:8.4f}".format(*row))

# %% [markdown]
# At zero mean detuning kappa1 falls monotonically and delta1 vanishes. Off
# resonance kappa1 first rises with width: broadening moves atoms onto
# resonance faster than it dilutes them.

# %%
for mean in (0.0, 1.3):
    signs = [kappa_width_derivative_sign(LAM, DopplerSpec.from_width(w, mean)) for w in (0.25, 0.5, 1.0, 1.5)]
    print(f"mean {mean}: sign of d kappa1 / d width at 0.25, 0.5, 1, 1.5 -> {signs}")

# %% [markdown]
# ## Check against the Voigt profile

# %%
def voigt(width, mean):
    w = wofz((mean + 1j) / (width * math.sqrt(2)))
    scale = math.pi / (width * math.sqrt(2 * math.pi))
    return scale * w.real, scale * w.imag


worst = 0.0
for width in (0.5, 1.0, 2.0, 4.0):
    for mean in np.linspace(-3, 3, 13):
        c = broadening_coefficients(LAM, DopplerSpec.from_width(width, mean))
        k, d = voigt(width, mean)
        worst = max(worst, abs(c.kappa1 - k) / k, abs(c.delta1 - d) / k)
print(f"largest relative deviation from the Voigt form: {worst:.2e}")
