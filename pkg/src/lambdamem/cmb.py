"""Direct integration of the Lambda-system Maxwell-Bloch equations.

Traveling-wave coordinates make the field equation local in T, so the
solver works slab by slab in Z: at fixed z every Doppler node is marched
across the T window with RK4, the Doppler-averaged optical coherences give
dOmega/dZ, and the fields are advanced to z + dz with a Heun
predictor-corrector (which needs a second Bloch sweep with the predicted
fields).

Spontaneous decay empties |3> at rate Gamma with equal branching into |1>
and |2>; the optical coherences decay at Gamma/2 and the ground coherence
is left undamped.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._kernels import bloch_sweep
from .core import (DensityField, DopplerSpec, FieldGrid, MediumConfig, SolverSettings,
                   density_violations)
from .doppler import quadrature_nodes
from .errors import GridUnderresolved, StateBlowup

BLOWUP_LIMIT = 1.0 + 1e-3


def bloch_rhs(rho, omega_s, omega_c, delta, gamma):
    """dRho/dT for density matrices of shape ``(..., 3, 3)``.

    Written from the Hamiltonian and Lindblad jump operators
    ``sqrt(Gamma/2)|1><3|`` and ``sqrt(Gamma/2)|2><3|``; the compiled sweep
    uses an equivalent entrywise form.
    """
    rho = np.asarray(rho, dtype=complex)
    om_s, om_c, delta = np.broadcast_arrays(np.asarray(omega_s, dtype=complex),
                                            np.asarray(omega_c, dtype=complex),
                                            np.asarray(delta, dtype=float))
    ham = np.zeros(om_s.shape + (3, 3), dtype=complex)
    ham[..., 0, 2] = om_s
    ham[..., 1, 2] = om_c
    ham[..., 2, 0] = np.conj(om_s)
    ham[..., 2, 1] = np.conj(om_c)
    ham[..., 2, 2] = -2 * delta
    ham *= -0.5
    out = -1j * (ham @ rho - rho @ ham)
    if np.any(gamma):
        r33 = rho[..., 2, 2]
        decay = np.zeros_like(out)
        decay[..., 0, 0] = 0.5 * gamma * r33
        decay[..., 1, 1] = 0.5 * gamma * r33
        decay[..., 2, 2] = -gamma * r33
        for k in range(2):
            decay[..., k, 2] = -0.5 * gamma * rho[..., k, 2]
            decay[..., 2, k] = -0.5 * gamma * rho[..., 2, k]
        out = out + decay
    return out


@dataclass(frozen=True, eq=False)
class BlochEnsembleState:
    """Density matrix of each Doppler node at the current (z, t)."""

    rho: np.ndarray
    deltas: np.ndarray
    weights: np.ndarray

    @classmethod
    def uniform(cls, initial_state, deltas, weights) -> "BlochEnsembleState":
        deltas = np.atleast_1d(np.asarray(deltas, dtype=float))
        rho = np.broadcast_to(np.asarray(initial_state, dtype=complex), deltas.shape + (3, 3)).copy()
        return cls(rho, deltas, np.asarray(weights, dtype=float))

    def averaged(self) -> np.ndarray:
        return np.einsum("k,kab->ab", self.weights, self.rho)


def step_bloch(ensemble: BlochEnsembleState, fields, fields_mid, fields_next, dt: float,
               gamma: float = 0.0) -> BlochEnsembleState:
    """One classical RK4 step in T for every Doppler node.

    ``fields``, ``fields_mid`` and ``fields_next`` are ``(Omega_s, Omega_c)``
    at t, t + dt/2 and t + dt.
    """
    rho, d = ensemble.rho, ensemble.deltas

    def f(r, om):
        return bloch_rhs(r, om[0], om[1], d, gamma)

    k1 = f(rho, fields)
    k2 = f(rho + 0.5 * dt * k1, fields_mid)
    k3 = f(rho + 0.5 * dt * k2, fields_mid)
    k4 = f(rho + dt * k3, fields_next)
    new = rho + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    if np.max(np.abs(new)) > BLOWUP_LIMIT:
        raise StateBlowup(f"density entry reached {np.max(np.abs(new)):.4g}; reduce dt")
    return BlochEnsembleState(new, ensemble.deltas, ensemble.weights)


def midpoint_values(f: np.ndarray) -> np.ndarray:
    """Values half-way between samples of a uniformly sampled signal.

    Four-point cubic interpolation in the interior, linear at the two ends.
    """
    f = np.asarray(f)
    mid = 0.5 * (f[:-1] + f[1:])
    if f.size >= 4:
        mid[1:-1] = (9.0 * (f[1:-2] + f[2:-1]) - (f[:-3] + f[3:])) / 16.0
    return mid


def clamp_field(field: np.ndarray, threshold: float) -> np.ndarray:
    out = np.array(field, dtype=complex)
    if threshold > 0:
        out[np.abs(out) < threshold] = 0.0
    return out


def step_maxwell(omega_s, omega_c, coh13, coh23, dz: float, mu: float,
                 resweep: Callable, clamp_threshold: float = 0.0):
    """Advance both envelopes from z to z + dz with Heun's method.

    ``coh13``/``coh23`` are the Doppler-averaged coherences at z;
    ``resweep(omega_s, omega_c)`` must return the averaged coherences
    produced by the predicted fields at z + dz.
    """
    fs = -1j * mu * np.asarray(coh13)
    fc = -1j * mu * np.asarray(coh23)
    pred_s = omega_s + dz * fs
    pred_c = omega_c + dz * fc
    p13, p23 = resweep(pred_s, pred_c)
    new_s = omega_s + 0.5 * dz * (fs - 1j * mu * p13)
    new_c = omega_c + 0.5 * dz * (fc - 1j * mu * p23)
    return clamp_field(new_s, clamp_threshold), clamp_field(new_c, clamp_threshold)


@dataclass
class SimulationResult:
    fields: FieldGrid
    density: DensityField
    snapshots: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def __iter__(self):
        yield self.fields
        yield self.density


class _Sweeper:
    """Bundles the per-run constants for repeated Bloch sweeps at fixed z."""

    def __init__(self, nt, deltas, weights, gamma, dt, rho0, order, snap_idx):
        self.deltas, self.weights = deltas, weights
        self.gamma, self.dt, self.rho0, self.order = gamma, dt, rho0, order
        self.snap_idx = snap_idx
        self.coh13 = np.empty(nt, dtype=complex)
        self.coh23 = np.empty(nt, dtype=complex)
        self.snaps = np.zeros((snap_idx.size, deltas.size, 3, 3), dtype=complex)

    def __call__(self, om_s, om_c):
        om_s = np.ascontiguousarray(om_s, dtype=complex)
        om_c = np.ascontiguousarray(om_c, dtype=complex)
        worst = bloch_sweep(om_s, om_c, midpoint_values(om_s), midpoint_values(om_c),
                            self.deltas, self.weights, float(self.gamma), float(self.dt),
                            self.rho0, self.order, self.snap_idx, self.coh13, self.coh23, self.snaps)
        if not worst <= BLOWUP_LIMIT:
            raise StateBlowup(f"population reached {worst:.4g}; the T grid is too coarse")
        return self.coh13.copy(), self.coh23.copy()


def _estimated_duration(om, t):
    mag = np.abs(om)
    peak = mag.max(initial=0.0)
    if peak == 0:
        return np.inf
    return float(np.trapezoid(mag, t)) / (np.pi * peak)


def simulate(medium: MediumConfig, doppler: DopplerSpec, boundary, settings: SolverSettings | None = None,
             snapshot_times=(), n_nodes: int | None = None) -> SimulationResult:
    """Propagate boundary pulses through the medium.

    ``boundary`` is either a pair of arrays sampled on ``settings.t_axis()``
    or a callable ``t -> (Omega_s, Omega_c)``. The returned density field
    holds the state at the end of the T window; ``snapshot_times`` adds
    density fields at intermediate times (e.g. between storage and
    retrieval pulses).
    """
    settings = settings or SolverSettings()
    started = time.perf_counter()
    t = settings.t_axis()
    z = settings.z_axis(medium.z_length)
    dt = float(t[1] - t[0])

    if callable(boundary):
        om_s, om_c = boundary(t)
    else:
        om_s, om_c = boundary
    om_s = np.array(np.broadcast_to(om_s, t.shape), dtype=complex)
    om_c = np.array(np.broadcast_to(om_c, t.shape), dtype=complex)

    shortest = min(_estimated_duration(om_s, t), _estimated_duration(om_c, t))
    if shortest < 10 * dt:
        warnings.warn(f"pulse duration ~{shortest:.3g} spans fewer than 10 T steps (dt = {dt:g})",
                      GridUnderresolved, stacklevel=2)

    deltas, weights = quadrature_nodes(doppler, n_nodes or settings.doppler_nodes)
    rho0 = np.broadcast_to(medium.initial_state, deltas.shape + (3, 3)).astype(complex)

    snap_times = [float(s) for s in snapshot_times]
    snap_idx = [int(round((s - t[0]) / dt)) for s in snap_times]
    if any(not 0 <= i < t.size for i in snap_idx):
        raise ValueError("snapshot times must lie inside the T window")
    order_idx = np.array(sorted(set(snap_idx + [t.size - 1])), dtype=np.int64)
    sweep = _Sweeper(t.size, deltas, weights, medium.gamma, dt, rho0, settings.order, order_idx)

    grid_s = np.empty((z.size, t.size), dtype=complex)
    grid_c = np.empty_like(grid_s)
    states = np.empty((order_idx.size, z.size, deltas.size, 3, 3), dtype=complex)
    mu = medium.mu
    for k in range(z.size):
        grid_s[k], grid_c[k] = om_s, om_c
        coh13, coh23 = sweep(om_s, om_c)
        states[:, k] = sweep.snaps
        if k == z.size - 1:
            break
        om_s, om_c = step_maxwell(om_s, om_c, coh13, coh23, settings.dz, mu, sweep,
                                  settings.clamp_threshold)

    def as_field(i):
        return DensityField(z, deltas, weights, states[i])

    final = as_field(order_idx.size - 1)
    snapshots = {s: as_field(int(np.searchsorted(order_idx, i))) for s, i in zip(snap_times, snap_idx)}
    diagnostics = density_diagnostics(final.rho)
    diagnostics["wall_time"] = time.perf_counter() - started
    diagnostics["n_nodes"] = int(deltas.size)
    return SimulationResult(FieldGrid(t, z, grid_s, grid_c), final, snapshots, diagnostics)


def density_diagnostics(rho) -> dict:
    """Worst trace, Hermiticity and positivity errors over a stack of density matrices."""
    rho = np.asarray(rho)
    herm = np.max(np.abs(rho - np.conj(np.swapaxes(rho, -1, -2))), initial=0.0)
    trace = np.max(np.abs(np.trace(rho, axis1=-2, axis2=-1) - 1.0), initial=0.0)
    low = np.min(np.linalg.eigvalsh(rho.reshape(-1, 3, 3)), initial=np.inf)
    return {"max_trace_error": float(trace), "max_hermiticity_error": float(herm),
            "min_eigenvalue": float(low)}


def check_run_hygiene(result: SimulationResult, tol: float = 1e-6, psd_tol: float = 1e-8) -> list[str]:
    """Problems with the recorded densities of a run, empty when all pass."""
    problems = []
    for label, dens in [("final", result.density), *result.snapshots.items()]:
        for msg in density_violations(dens.rho, tol, psd_tol):
            problems.append(f"{label}: {msg}")
    return problems
