"""Reflectionless soliton solutions of the Lambda-system Maxwell-Bloch equations.

A solution of order n is fixed by n eigenvalues ``lambda_j = xi_j - i/tau_j``
and n two-component norming constants. The medium enters only through the
Z-evolution of the norming constants, which for a Doppler-independent
diagonal initial state is a pair of decoupled exponentials governed by the
broadening coefficients (kappa_1, delta_1).

Everything here is vectorized over broadcastable ``z``/``t``/``delta``
arrays and pointwise independent.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import expit, logsumexp

from .core import (DensityField, DopplerSpec, FieldGrid, NormingConstantInit,
                   SpectralParameter)
from .doppler import BroadeningCoefficients, broadening_coefficients, quadrature_nodes
from .errors import (AsymptoticRegimeViolated, InfinitePhaseLag, NonDiagonalInitialState,
                     NonPositiveArea, SingularKernel, StorageOutsideMedium, WindowTooSmall)

TWO_PI = 2 * math.pi
COND_LIMIT = 1e12


def _populations(initial_state) -> tuple[float, float, float]:
    if initial_state is None:
        return (1.0, 0.0, 0.0)
    rho = np.asarray(initial_state)
    if rho.shape == (3,):
        return tuple(float(p) for p in rho)
    off = rho - np.diag(np.diag(rho))
    if np.any(np.abs(off) > 0):
        raise NonDiagonalInitialState("closed-form norming constants need a diagonal initial state")
    return tuple(float(p) for p in np.diag(rho).real)


def _rates(coeffs: BroadeningCoefficients, populations) -> np.ndarray:
    p1, p2, p3 = populations
    return np.array([p1 - p3, p2 - p3]) * coeffs.complex_rate


def evolve_norming_constant(init: NormingConstantInit, lam: SpectralParameter,
                            coeffs: BroadeningCoefficients, z, initial_state=None) -> np.ndarray:
    """Norming constant beta(z), shape ``z.shape + (2,)``.

    For atoms prepared in |1> this is ``(c1 exp(-(kappa1 + i delta1) z), c2)``.
    A general diagonal preparation scales each component's exponent by its
    population minus the excited-state population. ``lam`` is accepted for
    interface symmetry; its influence is already contained in ``coeffs``.
    """
    rates = _rates(coeffs, _populations(initial_state))
    z = np.asarray(z, dtype=float)[..., None]
    return init.vector * np.exp(-rates * z)


@dataclass(frozen=True)
class NormingConstantTrack:
    init: NormingConstantInit
    param: SpectralParameter
    coeffs: BroadeningCoefficients
    populations: tuple[float, float, float] = (1.0, 0.0, 0.0)

    def __call__(self, z) -> np.ndarray:
        return evolve_norming_constant(self.init, self.param, self.coeffs, z, self.populations)

    def log_abs_and_phase(self, z):
        """``ln|beta_k(z)|`` and ``arg beta_k(z)`` without forming the exponentials."""
        rates = _rates(self.coeffs, self.populations)
        z = np.asarray(z, dtype=float)[..., None]
        c = self.init.vector
        with np.errstate(divide="ignore"):
            log_abs = np.log(np.abs(c)) - rates.real * z
        return log_abs, np.angle(c) - rates.imag * z


@dataclass(frozen=True, eq=False)
class SolitonSolution:
    params: tuple[SpectralParameter, ...]
    inits: tuple[NormingConstantInit, ...]
    coefficients: tuple[BroadeningCoefficients, ...]
    populations: tuple[float, float, float] = (1.0, 0.0, 0.0)

    def __post_init__(self):
        n = len(self.params)
        if n == 0 or len(self.inits) != n or len(self.coefficients) != n:
            raise ValueError("need one norming constant and one coefficient pair per eigenvalue")
        lams = [p.lam for p in self.params]
        for i in range(n):
            for j in range(i):
                if lams[i] == lams[j]:
                    raise ValueError("spectral parameters must be pairwise distinct")

    @classmethod
    def build(cls, params: Sequence[SpectralParameter], inits: Sequence[NormingConstantInit],
              doppler: DopplerSpec | None = None, kappa0: float = 1.0,
              initial_state=None) -> "SolitonSolution":
        doppler = doppler or DopplerSpec()
        coeffs = tuple(broadening_coefficients(p, doppler, kappa0) for p in params)
        return cls(tuple(params), tuple(inits), coeffs, _populations(initial_state))

    @property
    def n(self) -> int:
        return len(self.params)

    @property
    def tracks(self) -> list[NormingConstantTrack]:
        return [NormingConstantTrack(c, p, k, self.populations)
                for c, p, k in zip(self.inits, self.params, self.coefficients)]

    @property
    def lams(self) -> np.ndarray:
        return np.array([p.lam for p in self.params])


def alpha_coefficients(lams) -> np.ndarray:
    lams = np.asarray(lams, dtype=complex)
    out = np.empty_like(lams)
    for i, li in enumerate(lams):
        others = np.delete(lams, i)
        out[i] = np.prod(np.conj(lams) - li) / (2 * np.prod(others - li))
    return out


def reconstruct_fields(sol: SolitonSolution, z, t):
    """Signal and control envelopes of the n-soliton solution at (z, t).

    Each soliton's vector ``b_j = beta_j exp(i lambda_j t)`` is handled
    through its log-norm and rescaled by ``1/(1 + |b_j|)``, which turns the
    kernel system into a bounded one. Raises :class:`SingularKernel` when
    the rescaled kernel's condition number exceeds 1e12.
    """
    z, t = np.broadcast_arrays(np.asarray(z, dtype=float), np.asarray(t, dtype=float))
    lams = sol.lams
    alpha = alpha_coefficients(lams)
    n = sol.n

    unit = np.empty(z.shape + (n, 2), dtype=complex)
    grow = np.empty(z.shape + (n,))
    shrink = np.empty(z.shape + (n,))
    for j, (track, p) in enumerate(zip(sol.tracks, sol.params)):
        log_abs, phase = track.log_abs_and_phase(z)
        log_abs = log_abs + (t / p.tau)[..., None]
        phase = phase + (p.xi * t)[..., None]
        log_norm = 0.5 * logsumexp(2 * log_abs, axis=-1)
        unit[..., j, :] = np.exp(log_abs - log_norm[..., None] + 1j * phase)
        grow[..., j] = expit(log_norm)       # |b| / (1 + |b|)
        shrink[..., j] = expit(-log_norm)    # 1 / (1 + |b|)

    b = unit * grow[..., None]
    da = shrink * alpha
    gram = np.einsum("...ik,...jk->...ij", np.conj(b), b)
    denom = lams[:, None] - np.conj(lams)[None, :]
    kernel = 2 * (np.conj(da)[..., :, None] * da[..., None, :] + gram) / denom
    if n > 1:
        cond = np.linalg.cond(kernel)
        if np.any(~np.isfinite(cond) | (cond > COND_LIMIT)):
            raise SingularKernel(f"kernel condition number {np.nanmax(cond):.3g} exceeds {COND_LIMIT:g}")
    rhs = shrink * np.conj(alpha)
    y = np.linalg.solve(kernel, rhs[..., None])[..., 0]
    fields = -4 * np.einsum("...j,...jk->...k", y, b)
    return fields[..., 0], fields[..., 1]


def one_soliton_fields(lam: SpectralParameter, init: NormingConstantInit,
                       coeffs: BroadeningCoefficients, z, t):
    """Closed-form matched pulse pair of the first-order solution."""
    z, t = np.broadcast_arrays(np.asarray(z, dtype=float), np.asarray(t, dtype=float))
    tau, xi = lam.tau, lam.xi
    k, d = coeffs.kappa1, coeffs.delta1
    a1, a2 = abs(init.c1), abs(init.c2)
    s1, s2 = init.sigma(tau)
    x = t / tau
    zeros = np.zeros(z.shape, dtype=complex)
    with np.errstate(over="ignore"):
        if a1 > 0:
            den = 2 * a1 * np.cosh(x - k * z + s1)
            if a2 > 0:
                den = den + a2 * np.exp(x + k * z + s2)
            omega_s = 4 * init.c1 / tau * np.exp(1j * (xi * t - d * z)) / den
        else:
            omega_s = zeros
        if a2 > 0:
            den = 2 * a2 * np.cosh(x + s2)
            if a1 > 0:
                den = den + a1 * np.exp(x - 2 * k * z + s1)
            omega_c = 4 * init.c2 / tau * np.exp(1j * xi * t) / den
        else:
            omega_c = zeros
    return omega_s, omega_c


def pulse_area(field, t, edge_tol: float = 1e-8) -> float:
    """Time integral of ``|Omega|`` over the sampled window."""
    mag = np.abs(np.asarray(field))
    if mag.size and max(mag[0], mag[-1]) >= edge_tol:
        raise WindowTooSmall(f"field is {max(mag[0], mag[-1]):.2e} at the window edge (limit {edge_tol:g})")
    return float(np.trapezoid(mag, t))


def two_pulse_area(omega_s, omega_c, t, edge_tol: float = 1e-8) -> float:
    return math.hypot(pulse_area(omega_s, t, edge_tol), pulse_area(omega_c, t, edge_tol))


def _dressing(lam_j, v, lam):
    """Factor ``I + (lam_j - lam_j*)/(lam - lam_j) v v^+ / |v|^2``, batched over ``v``."""
    proj = v[..., :, None] * np.conj(v[..., None, :]) / np.sum(np.abs(v) ** 2, axis=-1)[..., None, None]
    coef = (lam_j - np.conj(lam_j)) / (np.asarray(lam) - lam_j)
    return np.eye(2) + np.asarray(coef)[..., None, None] * proj


def scattering_abar(sol: SolitonSolution, z, lam) -> np.ndarray:
    """2x2 scattering block ``abar(lam) = l_1 l_2 ... l_n`` at position z."""
    z, lam = np.broadcast_arrays(np.asarray(z, dtype=float), np.asarray(lam))
    lams = sol.lams
    vs = []
    for i, track in enumerate(sol.tracks):
        beta = track(z)
        left = np.broadcast_to(np.eye(2, dtype=complex), z.shape + (2, 2))
        for j in range(i):
            left = left @ _dressing(lams[j], vs[j], lams[i])
        vs.append(np.linalg.solve(left, beta[..., None])[..., 0])
    out = np.broadcast_to(np.eye(2, dtype=complex), z.shape + (2, 2))
    for j in range(sol.n):
        out = out @ _dressing(lams[j], vs[j], lam)
    return out


def final_density(sol: SolitonSolution, z, delta) -> np.ndarray:
    """Density matrix left behind once all pulses have passed, shape ``(..., 3, 3)``."""
    abar = scattering_abar(sol, z, np.asarray(delta, dtype=float) + 0j)
    p1, p2, p3 = sol.populations
    rho_g = np.diag([p1, p2]).astype(complex)
    ground = np.conj(np.swapaxes(abar, -1, -2)) @ rho_g @ abar
    out = np.zeros(ground.shape[:-2] + (3, 3), dtype=complex)
    out[..., :2, :2] = ground
    out[..., 2, 2] = p3
    return out


def _imprint_elements(tau, xi, kappa1, delta1, sigma12, c12, z, delta, shift=0.0, phase=0.0):
    z, delta = np.broadcast_arrays(np.asarray(z, dtype=float), np.asarray(delta, dtype=float))
    arg = kappa1 * z - sigma12 - shift
    lor = 1.0 / (tau ** 2 * (delta - xi) ** 2 + 1)
    th, sh = np.tanh(arg), 1.0 / np.cosh(arg)
    out = np.zeros(z.shape + (3, 3), dtype=complex)
    out[..., 0, 0] = 1 + lor * (th ** 2 - 1)
    out[..., 1, 1] = lor * sh ** 2
    r12 = -c12 * np.exp(-1j * delta1 * z + 1j * phase) * lor * (1j * tau * (delta - xi) + th) * sh
    out[..., 0, 1] = r12
    out[..., 1, 0] = np.conj(r12)
    return out


def one_soliton_final_density(lam: SpectralParameter, init: NormingConstantInit,
                              coeffs: BroadeningCoefficients, z, delta) -> np.ndarray:
    """Closed-form post-pulse density of the first-order solution (atoms from |1>)."""
    c12 = init.c1 * np.conj(init.c2) / abs(init.c1 * init.c2)
    return _imprint_elements(lam.tau, lam.xi, coeffs.kappa1, coeffs.delta1,
                             init.sigma12, c12, z, delta)


def imprint_location(theta_s: float, theta_c: float, kappa1: float,
                     z_length: float | None = None) -> float:
    """Position of the stored spin wave, ``ln(theta_s/theta_c)/kappa1``."""
    if not (theta_s > 0 and theta_c > 0):
        raise NonPositiveArea(f"pulse areas must be positive, got {theta_s}, {theta_c}")
    x1 = math.log(theta_s / theta_c) / kappa1
    if z_length is not None and not 0 <= x1 <= z_length:
        warnings.warn(f"imprint at {x1:.3g} lies outside the medium [0, {z_length:g}]",
                      StorageOutsideMedium, stacklevel=2)
    return x1


def phase_lag(lam1: SpectralParameter, lam2: SpectralParameter) -> float:
    t1, t2 = lam1.tau, lam2.tau
    dx = (lam1.xi - lam2.xi) * t1 * t2
    num = (t1 + t2) ** 2 + dx ** 2
    den = (t1 - t2) ** 2 + dx ** 2
    if den == 0:
        raise InfinitePhaseLag("identical spectral parameters give an infinite phase lag")
    return 0.5 * math.log(num / den)


def displaced_imprint_location(sigma12: float, chi: float, kappa1: float) -> float:
    return (sigma12 + chi) / kappa1


def second_order_boundary_fields(lam1: SpectralParameter, lam2: SpectralParameter,
                                 init1: NormingConstantInit, init2: NormingConstantInit, t,
                                 min_ratio: float = 10.0, min_separation: float = 2.0):
    """Storage pair followed by a retrieval pair at Z = 0, asymptotic form.

    Valid for a dominant signal component (``|c1/c2| >= min_ratio``) and a
    retrieval soliton that arrives late (``sigma_1 - zeta >= min_separation``).
    ``init2`` must have a vanishing first component.

    Against the exact n = 2 solution the envelopes and delays are right in
    modulus. Each term also carries a constant phase set by the eigenvalue
    cross-ratios, which is trivial only for purely imaginary eigenvalues with
    ``tau_2 < tau_1``. The weak signal of the retrieval pair is right in order
    of magnitude only (for equal ``xi`` the exact amplitude is
    ``-2 tau_2/(tau_1 + tau_2)`` times this one), an O(|c2/c1|) error.
    """
    if init2.c1 != 0:
        raise ValueError("the retrieval norming constant must be of the form (0, d)")
    c1, c2, d = init1.c1, init1.c2, init2.c2
    sigma1 = init1.sigma(lam1.tau)[0]
    zeta = math.log(abs(d) * lam2.tau)
    if c2 == 0:
        ratio = math.inf
    else:
        ratio = abs(c1 / c2)
    if ratio < min_ratio or sigma1 - zeta < min_separation:
        raise AsymptoticRegimeViolated(
            f"|c1/c2| = {ratio:.3g} (need >= {min_ratio:g}), sigma1 - zeta = {sigma1 - zeta:.3g} "
            f"(need >= {min_separation:g})")
    chi = phase_lag(lam1, lam2)
    t = np.asarray(t, dtype=float)
    norm = math.hypot(abs(c1), abs(c2))
    first = 2 / lam1.tau * np.exp(1j * lam1.xi * t) / np.cosh(t / lam1.tau + sigma1) / norm
    second = 2 / lam2.tau * np.exp(1j * lam2.xi * t) / np.cosh(t / lam2.tau + zeta - chi) / norm
    return c1 * first + c2 * second, c2 * first + c1 * second


def _two_soliton(lam1, lam2, init1, init2, coeffs, doppler=None):
    coeffs2 = broadening_coefficients(lam2, doppler or DopplerSpec())
    return SolitonSolution((lam1, lam2), (init1, init2), (coeffs, coeffs2))


def retrieval_phase(lam1: SpectralParameter, lam2: SpectralParameter,
                    init1: NormingConstantInit, init2: NormingConstantInit,
                    coeffs: BroadeningCoefficients) -> float:
    """Extra coherence phase phi picked up when the retrieval soliton passes.

    Measured from the general dressing formula at the displaced imprint.
    """
    sol = _two_soliton(lam1, lam2, init1, init2, coeffs)
    chi = phase_lag(lam1, lam2)
    z0 = (init1.sigma12 + chi) / coeffs.kappa1
    delta = lam1.xi + 0.5 / lam1.tau
    general = final_density(sol, z0, delta)[0, 1]
    c12 = init1.c1 * np.conj(init1.c2) / abs(init1.c1 * init1.c2)
    bare = _imprint_elements(lam1.tau, lam1.xi, coeffs.kappa1, coeffs.delta1,
                             init1.sigma12, c12, z0, delta, shift=chi)[0, 1]
    return float(np.angle(general / bare))


def final_density_after_retrieval(lam1: SpectralParameter, lam2: SpectralParameter,
                                  init1: NormingConstantInit, init2: NormingConstantInit,
                                  coeffs: BroadeningCoefficients, z, delta,
                                  phi: float | None = None) -> np.ndarray:
    """Closed-form density after storage and retrieval pairs have both passed.

    Same shape as the single-pair imprint, shifted by the phase lag chi and
    with the coherence rotated by ``phi`` (measured when not given).
    """
    if phi is None:
        phi = retrieval_phase(lam1, lam2, init1, init2, coeffs)
    chi = phase_lag(lam1, lam2)
    c12 = init1.c1 * np.conj(init1.c2) / abs(init1.c1 * init1.c2)
    return _imprint_elements(lam1.tau, lam1.xi, coeffs.kappa1, coeffs.delta1,
                             init1.sigma12, c12, z, delta, shift=chi, phase=phi)


def group_velocity(kappa1: float, tau: float, c: float) -> float:
    """Signal group velocity as a fraction of c, ``1/(1 + kappa1 c tau)``."""
    x = kappa1 * c * tau
    if x < 0:
        raise ValueError("kappa1 c tau must be >= 0")
    return 1.0 / (1.0 + x)


def traveling_frame_delay_rate(kappa1: float, tau: float) -> float:
    """dT/dZ of the signal peak in traveling coordinates, ``1/v_g - 1/c = kappa1 tau``."""
    return kappa1 * tau


# Constructors for the standard storage/retrieval configurations.

def storage_norming_constant(theta_c: float, tau: float = 1.0, center: float = 0.0,
                             phase_s: float = 0.0, phase_c: float = 0.0) -> NormingConstantInit:
    """Norming constant whose Z = 0 pulses have control area ``theta_c`` and total area 2 pi.

    ``center`` is the time of the common pulse peak at the boundary.
    """
    if not 0 < theta_c < TWO_PI:
        raise NonPositiveArea("control area must lie in (0, 2 pi)")
    theta_s = math.sqrt(TWO_PI ** 2 - theta_c ** 2)
    scale = math.exp(-center / tau) / (TWO_PI * tau)
    return NormingConstantInit(theta_s * scale * np.exp(1j * phase_s), theta_c * scale * np.exp(1j * phase_c))


def control_area_for_location(x1: float, kappa1: float) -> float:
    """Control area that, with a 2 pi two-pulse area, stores at ``x1``."""
    return TWO_PI / math.sqrt(1.0 + math.exp(2 * kappa1 * x1))


def retrieval_norming_constant(tau: float, center: float, phase: float = 0.0) -> NormingConstantInit:
    """Pure-control soliton ``(0, d)`` whose isolated pulse peaks at ``center``."""
    return NormingConstantInit(0.0, math.exp(-center / tau) / tau * np.exp(1j * phase))


def field_grid(sol: SolitonSolution, z_axis, t_axis) -> FieldGrid:
    z_axis, t_axis = np.asarray(z_axis, dtype=float), np.asarray(t_axis, dtype=float)
    om_s, om_c = reconstruct_fields(sol, z_axis[:, None], t_axis[None, :])
    return FieldGrid(t_axis, z_axis, om_s, om_c)


def density_field(sol: SolitonSolution, z_axis, doppler: DopplerSpec | None = None,
                  deltas=None, weights=None) -> DensityField:
    """Post-pulse densities on a z grid and a set of Doppler nodes."""
    if deltas is None:
        deltas, weights = quadrature_nodes(doppler or DopplerSpec())
    deltas = np.atleast_1d(np.asarray(deltas, dtype=float))
    weights = np.ones_like(deltas) / deltas.size if weights is None else np.asarray(weights, dtype=float)
    z_axis = np.asarray(z_axis, dtype=float)
    rho = final_density(sol, z_axis[:, None], deltas[None, :])
    return DensityField(z_axis, deltas, weights, rho)
