"""Dimensionless domain types shared by the analytic and numerical solvers.

Units throughout: time in units of the reference pulse duration tau_1,
frequencies in 1/tau_1, lengths in 1/kappa_0 where kappa_0 = mu tau_1 / 2 is
the resonant absorption coefficient of an unbroadened medium.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ConfigIssue, InvalidDensityMatrix

ANALYTIC_TOL = 1e-12
NUMERIC_TOL = 1e-8
PSD_TOL = 1e-8


def _issue(code, name, msg):
    return ConfigError([ConfigIssue(code, name, msg)])


@dataclass(frozen=True)
class SpectralParameter:
    """Scattering eigenvalue ``lambda = xi - i/tau`` of one soliton.

    ``xi`` acts as a self-detuning and ``tau`` as the pulse duration.
    """

    xi: float = 0.0
    tau: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.tau) and self.tau > 0):
            raise _issue("NonPositiveTau", "tau", f"tau must be > 0, got {self.tau}")
        if not math.isfinite(self.xi):
            raise _issue("BadGrid", "xi", "xi must be finite")

    @property
    def lam(self) -> complex:
        return complex(self.xi, -1.0 / self.tau)

    @classmethod
    def from_complex(cls, lam: complex) -> "SpectralParameter":
        if lam.imag >= 0:
            raise _issue("NonPositiveTau", "tau", "eigenvalue must lie in Im(lambda) < 0")
        return cls(xi=lam.real, tau=-1.0 / lam.imag)


@dataclass(frozen=True)
class NormingConstantInit:
    """Two components of a norming constant at Z = 0."""

    c1: complex = 1.0
    c2: complex = 0.0

    def __post_init__(self):
        object.__setattr__(self, "c1", complex(self.c1))
        object.__setattr__(self, "c2", complex(self.c2))
        if self.c1 == 0 and self.c2 == 0:
            raise _issue("ZeroNormingConstant", "c", "c1 and c2 cannot both be zero")
        if not all(map(np.isfinite, (self.c1, self.c2))):
            raise _issue("ZeroNormingConstant", "c", "norming constants must be finite")

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.c1, self.c2], dtype=np.complex128)

    def sigma(self, tau: float) -> tuple[float, float]:
        """Log amplitudes ``ln(|c_i| tau)``; -inf for a vanishing component."""
        with np.errstate(divide="ignore"):
            return tuple(float(np.log(abs(c) * tau)) for c in (self.c1, self.c2))

    @property
    def sigma12(self) -> float:
        with np.errstate(divide="ignore"):
            return float(np.log(abs(self.c1)) - np.log(abs(self.c2)))


@dataclass(frozen=True)
class DopplerSpec:
    """Gaussian distribution of one-photon detunings.

    ``t2star = inf`` is the unbroadened medium and is treated as a single
    node at the mean detuning, not as a limit of wide Gaussians.
    """

    t2star: float = math.inf
    mean_detuning: float = 0.0
    n_nodes: int = 64

    def __post_init__(self):
        if not (self.t2star > 0) or math.isnan(self.t2star):
            raise _issue("BadGrid", "t2star", "T2* must be > 0 (inf for no broadening)")
        if not math.isfinite(self.mean_detuning):
            raise _issue("BadGrid", "mean_detuning", "mean detuning must be finite")
        if int(self.n_nodes) != self.n_nodes or self.n_nodes < 1:
            raise _issue("BadGrid", "n_nodes", "n_nodes must be a positive integer")

    @classmethod
    def from_width(cls, width: float, mean: float = 0.0, n_nodes: int = 64) -> "DopplerSpec":
        """Build from the dimensionless groups tau/T2* and tau*mean (tau = 1)."""
        if width < 0:
            raise _issue("BadGrid", "width", "Doppler width must be >= 0")
        return cls(math.inf if width == 0 else 1.0 / width, mean, n_nodes)

    @property
    def width(self) -> float:
        return 0.0 if math.isinf(self.t2star) else 1.0 / self.t2star

    @property
    def is_delta(self) -> bool:
        return math.isinf(self.t2star)

    def with_nodes(self, n_nodes: int) -> "DopplerSpec":
        return DopplerSpec(self.t2star, self.mean_detuning, n_nodes)


def ground_state(populations=(1.0, 0.0, 0.0)) -> np.ndarray:
    return np.diag(np.asarray(populations, dtype=np.complex128))


@dataclass(frozen=True, eq=False)
class MediumConfig:
    kappa0: float = 1.0
    gamma: float = 0.0
    z_length: float = 10.0
    initial_state: np.ndarray = field(default_factory=ground_state)

    def __post_init__(self):
        issues = []
        if not self.gamma >= 0:
            issues.append(ConfigIssue("NegativeGamma", "gamma", f"gamma must be >= 0, got {self.gamma}"))
        if not self.z_length > 0:
            issues.append(ConfigIssue("BadGrid", "z_length", "medium length must be > 0"))
        if not self.kappa0 > 0:
            issues.append(ConfigIssue("BadGrid", "kappa0", "kappa0 must be > 0"))
        rho = np.asarray(self.initial_state, dtype=np.complex128)
        if rho.shape != (3, 3):
            issues.append(ConfigIssue("BadGrid", "initial_state", "initial state must be 3x3"))
        elif abs(rho[0, 2]) > 0 or abs(rho[1, 2]) > 0:
            issues.append(ConfigIssue("BadGrid", "initial_state",
                                      "initial state must be block diagonal (rho13 = rho23 = 0)"))
        elif density_violations(rho, NUMERIC_TOL):
            issues.append(ConfigIssue("BadGrid", "initial_state", "; ".join(density_violations(rho, NUMERIC_TOL))))
        if issues:
            raise ConfigError(issues)
        object.__setattr__(self, "initial_state", rho)

    @property
    def mu(self) -> float:
        """Coupling constant mu = 2 kappa0 / tau_1 with tau_1 = 1."""
        return 2.0 * self.kappa0

    def __eq__(self, other):
        if not isinstance(other, MediumConfig):
            return NotImplemented
        return (self.kappa0, self.gamma, self.z_length) == (other.kappa0, other.gamma, other.z_length) \
            and np.array_equal(self.initial_state, other.initial_state)


@dataclass(frozen=True)
class SolverSettings:
    """Grid and integrator settings for the Maxwell-Bloch solver.

    The T window defaults to [-20, 40]; a field is zeroed wherever
    ``|Omega| < clamp_threshold`` after each Z step.
    """

    dt: float = 0.02
    dz: float = 0.02
    clamp_threshold: float = 1e-5
    t_window: tuple[float, float] = (-20.0, 40.0)
    order: int = 4
    doppler_nodes: int = 32

    def __post_init__(self):
        issues = []
        if not self.dt > 0:
            issues.append(ConfigIssue("BadGrid", "dt", "dt must be > 0"))
        if not self.dz > 0:
            issues.append(ConfigIssue("BadGrid", "dz", "dz must be > 0"))
        if not self.clamp_threshold >= 0:
            issues.append(ConfigIssue("BadGrid", "clamp", "clamp threshold must be >= 0"))
        t0, t1 = self.t_window
        if not t1 > t0:
            issues.append(ConfigIssue("BadGrid", "t_window", "t_max must exceed t_min"))
        if self.order not in (2, 4):
            issues.append(ConfigIssue("BadGrid", "order", "integrator order must be 2 or 4"))
        if not (isinstance(self.doppler_nodes, (int, np.integer)) and self.doppler_nodes >= 1):
            issues.append(ConfigIssue("BadGrid", "doppler_nodes", "need at least one Doppler node"))
        if issues:
            raise ConfigError(issues)
        object.__setattr__(self, "t_window", (float(t0), float(t1)))

    def t_axis(self) -> np.ndarray:
        t0, t1 = self.t_window
        n = int(round((t1 - t0) / self.dt))
        return t0 + self.dt * np.arange(n + 1)

    def z_axis(self, z_length: float) -> np.ndarray:
        n = int(round(z_length / self.dz))
        return self.dz * np.arange(n + 1)


def density_violations(rho, tol: float = ANALYTIC_TOL, psd_tol: float = PSD_TOL) -> list[str]:
    """List the ways ``rho`` (shape ``(..., 3, 3)``) fails to be a density matrix."""
    rho = np.asarray(rho)
    if rho.shape[-2:] != (3, 3):
        return [f"expected trailing shape (3, 3), got {rho.shape}"]
    out = []
    herm = np.max(np.abs(rho - np.conj(np.swapaxes(rho, -1, -2))), initial=0.0)
    if herm > tol:
        out.append(f"not Hermitian (max deviation {herm:.3g})")
    tr = np.max(np.abs(np.trace(rho, axis1=-2, axis2=-1) - 1.0), initial=0.0)
    if tr > tol:
        out.append(f"trace differs from 1 by {tr:.3g}")
    if not out:
        hermitian_part = 0.5 * (rho + np.conj(np.swapaxes(rho, -1, -2)))
        low = np.min(np.linalg.eigvalsh(hermitian_part), initial=np.inf)
        if low < -psd_tol:
            out.append(f"not positive semidefinite (eigenvalue {low:.3g})")
    return out


def is_density_matrix(rho, tol: float = ANALYTIC_TOL) -> bool:
    return not density_violations(rho, tol)


def check_density(rho, tol: float = ANALYTIC_TOL) -> None:
    bad = density_violations(rho, tol)
    if bad:
        raise InvalidDensityMatrix("; ".join(bad))


def _check_axis(name, axis):
    axis = np.asarray(axis, dtype=float)
    if axis.ndim != 1 or axis.size < 2:
        raise _issue("BadGrid", name, "axis needs at least two samples")
    step = np.diff(axis)
    if np.any(step <= 0):
        raise _issue("BadGrid", name, "axis must be strictly increasing")
    if np.max(np.abs(step - step[0])) > 1e-9 * max(1.0, abs(step[0])):
        raise _issue("BadGrid", name, "axis must be uniformly spaced")
    return axis


@dataclass(frozen=True, eq=False)
class FieldGrid:
    """Signal and control envelopes sampled on a uniform (z, t) grid."""

    t_axis: np.ndarray
    z_axis: np.ndarray
    omega_s: np.ndarray
    omega_c: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "t_axis", _check_axis("t_axis", self.t_axis))
        object.__setattr__(self, "z_axis", _check_axis("z_axis", self.z_axis))
        shape = (self.z_axis.size, self.t_axis.size)
        for name in ("omega_s", "omega_c"):
            arr = np.asarray(getattr(self, name), dtype=np.complex128)
            if arr.shape != shape:
                raise _issue("BadGrid", name, f"expected shape {shape}, got {arr.shape}")
            object.__setattr__(self, name, arr)

    @property
    def dt(self) -> float:
        return float(self.t_axis[1] - self.t_axis[0])

    @property
    def dz(self) -> float:
        return float(self.z_axis[1] - self.z_axis[0])

    def field(self, which: str) -> np.ndarray:
        if which in ("s", "signal"):
            return self.omega_s
        if which in ("c", "control"):
            return self.omega_c
        raise ValueError(f"unknown field {which!r}")


@dataclass(frozen=True, eq=False)
class DensityField:
    """Post-pulse density matrices over (z, Doppler node).

    ``rho`` has shape ``(nz, n_nodes, 3, 3)``; ``weights`` are the quadrature
    weights used for Doppler averages and sum to one.
    """

    z_axis: np.ndarray
    delta_nodes: np.ndarray
    weights: np.ndarray
    rho: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "z_axis", _check_axis("z_axis", self.z_axis))
        nodes = np.atleast_1d(np.asarray(self.delta_nodes, dtype=float))
        weights = np.atleast_1d(np.asarray(self.weights, dtype=float))
        rho = np.asarray(self.rho, dtype=np.complex128)
        if weights.shape != nodes.shape:
            raise _issue("BadGrid", "weights", "one weight per Doppler node")
        if rho.shape != (self.z_axis.size, nodes.size, 3, 3):
            raise _issue("BadGrid", "rho", f"rho shape {rho.shape} does not match the axes")
        object.__setattr__(self, "delta_nodes", nodes)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "rho", rho)

    def averaged(self) -> np.ndarray:
        """Doppler-averaged density matrix per z, shape ``(nz, 3, 3)``."""
        return np.einsum("k,zkab->zab", self.weights, self.rho)
