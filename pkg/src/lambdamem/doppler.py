"""Gaussian Doppler profile and the broadening coefficients kappa_1, delta_1.

Both coefficients are Gaussian averages of a Lorentzian of unit half-width
in the normalized detuning ``nu = tau (Delta - xi)``::

    kappa_1 = kappa0 (tau/tau_1) <1 / (nu^2 + 1)>
    delta_1 = kappa0 (tau/tau_1) <nu / (nu^2 + 1)>

The averages use Gauss-Hermite quadrature in the Gaussian variable. For
wide profiles the Lorentzian is sharp on the scale of the Gaussian and many
nodes are needed, so the node count is doubled until the result settles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_hermite

from .core import DopplerSpec, SpectralParameter
from .errors import DeltaDistributionQuery, QuadratureNotConverged

MAX_NODES = 2**17
CONVERGENCE_RTOL = 1e-8
DERIVATIVE_REL_STEP = 1e-4


@dataclass(frozen=True)
class BroadeningCoefficients:
    kappa1: float
    delta1: float

    @property
    def complex_rate(self) -> complex:
        return complex(self.kappa1, self.delta1)


def distribution_value(delta, spec: DopplerSpec):
    """Gaussian density F(Delta) with standard deviation 1/T2*."""
    if spec.is_delta:
        raise DeltaDistributionQuery("T2* = inf is a delta distribution; it has no pointwise value")
    x = (np.asarray(delta, dtype=float) - spec.mean_detuning) * spec.t2star
    return spec.t2star / math.sqrt(2 * math.pi) * np.exp(-0.5 * x * x)


@lru_cache(maxsize=32)
def _hermite(n: int):
    u, w = roots_hermite(n)
    u.setflags(write=False)
    w = w / math.sqrt(math.pi)
    w.setflags(write=False)
    return u, w


def quadrature_nodes(spec: DopplerSpec, n_nodes: int | None = None):
    """Detuning nodes and weights (summing to one) for Doppler averages."""
    if spec.is_delta:
        return np.array([spec.mean_detuning]), np.array([1.0])
    u, w = _hermite(int(n_nodes or spec.n_nodes))
    return spec.mean_detuning + math.sqrt(2.0) * u / spec.t2star, w.copy()


def coefficients_on_nodes(lam: SpectralParameter, deltas, weights, kappa0: float = 1.0) -> BroadeningCoefficients:
    """Coefficients for a fixed discrete detuning ensemble (normalized form)."""
    nu = lam.tau * (np.asarray(deltas, dtype=float) - lam.xi)
    lor = np.asarray(weights, dtype=float) / (nu * nu + 1.0)
    scale = kappa0 * lam.tau
    return BroadeningCoefficients(scale * float(lor.sum()), scale * float((nu * lor).sum()))


def coefficients_unnormalized(lam: SpectralParameter, deltas, weights, mu: float) -> BroadeningCoefficients:
    """Same coefficients written with the coupling ``mu`` and raw detuning.

    Kept alongside :func:`coefficients_on_nodes` so the two algebraic forms
    can be checked against each other.
    """
    off = np.asarray(deltas, dtype=float) - lam.xi
    den = off * off + lam.tau ** -2
    w = np.asarray(weights, dtype=float)
    return BroadeningCoefficients(mu / (2 * lam.tau) * float((w / den).sum()),
                                  mu / 2 * float((w * off / den).sum()))


def broadening_coefficients(lam: SpectralParameter, spec: DopplerSpec, kappa0: float = 1.0,
                            rtol: float = CONVERGENCE_RTOL, max_nodes: int = MAX_NODES) -> BroadeningCoefficients:
    """Absorption coefficient kappa_1 and refractive shift delta_1 for one soliton.

    Starts from ``spec.n_nodes`` Gauss-Hermite nodes and doubles until two
    successive estimates agree to ``rtol`` (relative to the coefficient
    magnitude). The unbroadened case returns the Lorentzian point values.
    """
    if spec.is_delta:
        nu = lam.tau * (spec.mean_detuning - lam.xi)
        scale = kappa0 * lam.tau / (nu * nu + 1.0)
        return BroadeningCoefficients(scale, scale * nu)

    n = max(int(spec.n_nodes), 2)
    prev = coefficients_on_nodes(lam, *quadrature_nodes(spec, n), kappa0)
    while n < max_nodes:
        n *= 2
        cur = coefficients_on_nodes(lam, *quadrature_nodes(spec, n), kappa0)
        size = math.hypot(cur.kappa1, cur.delta1)
        change = math.hypot(cur.kappa1 - prev.kappa1, cur.delta1 - prev.delta1)
        if change <= rtol * size:
            return cur
        prev = cur
    raise QuadratureNotConverged(
        f"Gauss-Hermite estimate still moving by {change / size:.2e} at {n} nodes "
        f"(width {spec.width:g}, mean {spec.mean_detuning:g})")


def kappa_width_derivative_sign(lam: SpectralParameter, spec: DopplerSpec, kappa0: float = 1.0,
                                rel_step: float = DERIVATIVE_REL_STEP, zero_tol: float = 1e-6) -> int:
    """Sign of d(kappa_1)/d(tau/T2*) by finite difference in the width.

    Central difference with relative step ``rel_step``. At zero width kappa_1
    is even in the width, so a forward difference with absolute step
    ``rel_step`` is used there. Slopes smaller than ``zero_tol`` count as 0.
    """
    width = spec.width
    mean, nodes = spec.mean_detuning, spec.n_nodes

    def kappa(w):
        return broadening_coefficients(lam, DopplerSpec.from_width(w, mean, nodes), kappa0).kappa1

    if width == 0.0:
        h = rel_step
        slope = (kappa(h) - kappa(0.0)) / h
    else:
        h = rel_step * width
        slope = (kappa(width + h) - kappa(width - h)) / (2 * h)
    if abs(slope) < zero_tol:
        return 0
    return 1 if slope > 0 else -1


def coefficient_table(widths, means, kappa0: float = 1.0, tau: float = 1.0):
    """Rows ``(width, mean, kappa1/kappa0, delta1/kappa0)`` over a grid of dimensionless groups."""
    lam = SpectralParameter(0.0, tau)
    rows = []
    for w in widths:
        for m in means:
            c = broadening_coefficients(lam, DopplerSpec.from_width(float(w), float(m)), kappa0)
            rows.append((float(w), float(m), c.kappa1 / kappa0, c.delta1 / kappa0))
    return rows
