"""Observables extracted from field and density grids, and the parameter scans built on them.

All quantities use the nondimensional units of the rest of the package:
times in tau_1 = 1, lengths in 1/kappa_0. Physical variants are given in
the dimensionless groups ``tau Gamma``, ``tau/T2*`` and ``tau Delta_bar``.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from . import ist
from .cmb import SimulationResult, simulate
from .core import (DensityField, DopplerSpec, FieldGrid, MediumConfig,
                   SolverSettings, SpectralParameter)
from .doppler import BroadeningCoefficients, broadening_coefficients
from .errors import DivisionByZeroCoherence, LambdaMemError, NoImprintFound, PeakLost

log = logging.getLogger(__name__)

MIN_IMPRINT = 1e-4
MIN_COHERENCE = 1e-12
TWO_PI = 2 * math.pi
_UNIT = BroadeningCoefficients(1.0, 0.0)


def parabolic_offset(y_left: float, y_mid: float, y_right: float) -> float:
    """Vertex offset (in samples, within [-0.5, 0.5]) of the parabola through three points."""
    curv = y_left - 2 * y_mid + y_right
    if curv >= 0:
        return 0.0
    return float(np.clip(0.5 * (y_left - y_right) / curv, -0.5, 0.5))


def refined_argmax(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Location and index of the largest sample, refined by a 3-point parabola."""
    i = int(np.argmax(y))
    if 0 < i < y.size - 1:
        return x[i] + parabolic_offset(y[i - 1], y[i], y[i + 1]) * (x[1] - x[0]), i
    return float(x[i]), i


def _crossing(x, y, level, i, step):
    j = i
    while 0 <= j + step < y.size and y[j + step] >= level:
        j += step
    k = j + step
    if not 0 <= k < y.size:
        return float(x[j])
    frac = (y[j] - level) / (y[j] - y[k])
    return float(x[j] + frac * (x[k] - x[j]))


def half_max_width(x, y, i) -> float:
    level = 0.5 * y[i]
    return _crossing(x, y, level, i, 1) - _crossing(x, y, level, i, -1)


@dataclass
class ImprintProfile:
    z_axis: np.ndarray
    rho22_profile: np.ndarray
    rho12_profile: np.ndarray
    location: float
    width: float

    @property
    def peak(self) -> float:
        return float(self.rho22_profile.max())


def locate_imprint(density: DensityField, min_peak: float = MIN_IMPRINT) -> ImprintProfile:
    """Position and width of the stored spin wave from the Doppler-averaged rho22 profile."""
    avg = density.averaged()
    r22 = np.clip(avg[:, 1, 1].real, 0.0, None)
    r12 = avg[:, 0, 1]
    if r22.max(initial=0.0) < min_peak:
        raise NoImprintFound(f"max rho22 is {r22.max(initial=0.0):.2e} (< {min_peak:g}); nothing was stored")
    z = density.z_axis
    loc, i = refined_argmax(z, r22)
    return ImprintProfile(z, r22, r12, float(np.clip(loc, z[0], z[-1])), half_max_width(z, r22, i))


def coherence_integral(density: DensityField) -> float:
    """Doppler-weighted L1 norm over z of the ground-state coherence."""
    per_z = np.abs(density.rho[:, :, 0, 1]) @ density.weights
    return float(np.trapezoid(per_z, density.z_axis))


def coherence_survival(before: DensityField, after: DensityField) -> float:
    """Fraction of the integrated ground-state coherence that survives a retrieval pass."""
    if before.rho.shape != after.rho.shape or not np.array_equal(before.z_axis, after.z_axis):
        raise ValueError("before/after densities must share the same grid")
    ref = coherence_integral(before)
    if ref < MIN_COHERENCE:
        raise DivisionByZeroCoherence(f"coherence before retrieval is {ref:.2e}")
    return coherence_integral(after) / ref


def peak_trajectory(fields: FieldGrid, which: str = "signal", threshold: float = 1e-5,
                    stop_when_lost: bool = True) -> list[tuple[float, float]]:
    """Refined arrival time of the field maximum at each z.

    Stops at the first z where the pulse has fallen below ``threshold``
    (absorbed or stored), or raises ``PeakLost`` if ``stop_when_lost`` is
    false. An empty trajectory also raises.
    """
    mag = np.abs(fields.field(which))
    out = []
    for k, z in enumerate(fields.z_axis):
        if mag[k].max() < threshold:
            if stop_when_lost and out:
                break
            raise PeakLost(f"{which} amplitude below {threshold:g} at z = {z:.4g}")
        t_peak, _ = refined_argmax(fields.t_axis, mag[k])
        out.append((float(z), float(t_peak)))
    return out


# ---------------------------------------------------------------- run setup

@dataclass(frozen=True)
class Variant:
    """Non-ideal medium parameters of one scan curve, in units of tau_1."""

    gamma: float = 0.0
    width: float = 0.0
    mean: float = 0.0

    def doppler(self, n_nodes: int = 64) -> DopplerSpec:
        return DopplerSpec.from_width(self.width, self.mean, n_nodes)

    def kappa1(self, kappa0: float = 1.0, tau: float = 1.0) -> float:
        lam = SpectralParameter(0.0, tau)
        return broadening_coefficients(lam, self.doppler(), kappa0).kappa1

    def label(self) -> str:
        return f"gamma={self.gamma:g},width={self.width:g},mean={self.mean:g}"


def storage_pulses(theta_c: float, t, tau: float = 1.0, center: float = 0.0):
    """Matched signal/control pair with two-pulse area 2 pi, peaking at ``center``."""
    init = ist.storage_norming_constant(theta_c, tau, center)
    return ist.one_soliton_fields(SpectralParameter(0.0, tau), init, _UNIT, 0.0, t)


def control_pulse(t, tau: float, center: float):
    """Lone 2 pi control sech pulse of duration ``tau``."""
    init = ist.retrieval_norming_constant(tau, center)
    return ist.one_soliton_fields(SpectralParameter(0.0, tau), init, _UNIT, 0.0, t)[1]


@dataclass(frozen=True)
class RunPlan:
    """Shared settings of the runs behind one scan."""

    z_length: float = 10.0
    kappa0: float = 1.0
    settings: SolverSettings = field(default_factory=SolverSettings)
    storage_center: float = 0.0
    retrieval_center: float = 15.0

    def medium(self, variant: Variant) -> MediumConfig:
        return MediumConfig(kappa0=self.kappa0, gamma=variant.gamma, z_length=self.z_length)


def run_storage(theta_c: float, variant: Variant, plan: RunPlan) -> SimulationResult:
    def boundary(t):
        return storage_pulses(theta_c, t, center=plan.storage_center)

    return simulate(plan.medium(variant), variant.doppler(), boundary, plan.settings)


def storage_location(theta_c: float, variant: Variant, plan: RunPlan) -> float:
    return locate_imprint(run_storage(theta_c, variant, plan).density).location


def analytic_storage_location(theta_c: float, variant: Variant, kappa0: float = 1.0) -> float:
    """``(kappa0/kappa1) ln(theta_s/theta_c)`` in units of 1/kappa0."""
    theta_s = math.sqrt(TWO_PI ** 2 - theta_c ** 2)
    return ist.imprint_location(theta_s, theta_c, variant.kappa1(kappa0))


def analytic_displacement(tau2: float, variant: Variant, kappa0: float = 1.0, tau1: float = 1.0) -> float:
    """``(kappa0/kappa1) ln((tau1+tau2)/|tau1-tau2|)``: phase lag of equal-xi solitons over kappa1."""
    chi = ist.phase_lag(SpectralParameter(0.0, tau1), SpectralParameter(0.0, tau2))
    return chi / variant.kappa1(kappa0, tau1)


@dataclass
class DisplacementRun:
    x1: float
    x2: float
    result: SimulationResult
    before: DensityField

    @property
    def displacement(self) -> float:
        return self.x2 - self.x1


def run_displacement(tau2: float, variant: Variant, plan: RunPlan, x1_target: float = 5.0,
                     x1: float | None = None, snapshot_lead: float = 5.0) -> DisplacementRun:
    """Store at ``x1_target`` with a 2 pi signal, then send a 2 pi control of duration ``tau2``.

    The storage control area is chosen from the analytic location formula
    with the variant's kappa1. ``x1`` is the location actually reached by
    storage alone; it is measured (one extra run) when not supplied. The
    density ``snapshot_lead * tau2`` before the control pulse serves as the
    pre-retrieval state.
    """
    theta_c = ist.control_area_for_location(x1_target, variant.kappa1(plan.kappa0))
    if x1 is None:
        x1 = storage_location(theta_c, variant, plan)

    def boundary(t):
        om_s, om_c = storage_pulses(theta_c, t, center=plan.storage_center)
        return om_s, om_c + control_pulse(t, tau2, plan.retrieval_center)

    t_before = plan.retrieval_center - snapshot_lead * tau2
    res = simulate(plan.medium(variant), variant.doppler(), boundary, plan.settings,
                   snapshot_times=[t_before])
    x2 = locate_imprint(res.density).location
    return DisplacementRun(x1, x2, res, res.snapshots[t_before])


# ---------------------------------------------------------------- scans

@dataclass
class ScanResult:
    parameter: str
    values: np.ndarray
    observable: str
    observed: np.ndarray
    reference: np.ndarray
    metadata: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.observed = np.asarray(self.observed, dtype=float)
        self.reference = np.asarray(self.reference, dtype=float)
        if not (self.values.shape == self.observed.shape == self.reference.shape):
            raise ValueError("parameter, observable and reference arrays must have equal length")

    def rows(self):
        for i, (v, o, r) in enumerate(zip(self.values, self.observed, self.reference)):
            yield v, o, r, self.failures.get(i, "")


def _map(fn: Callable, args: Sequence, jobs: int):
    """Evaluate ``fn(*a)`` for each ``a``, keeping order; errors come back as exceptions."""

    if jobs <= 1 or len(args) <= 1:
        return [_safe_call(fn, a) for a in args]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(_safe_call, fn, a) for a in args]
        return [f.result() for f in futures]


def _safe_call(fn, a):
    try:
        return fn(*a)
    except LambdaMemError as exc:
        return exc


def _collect(outcomes):
    observed, failures = [], {}
    for i, out in enumerate(outcomes):
        if isinstance(out, Exception):
            log.warning("scan point %d failed: %s", i, out)
            failures[i] = f"{type(out).__name__}: {out}"
            observed.append(math.nan)
        else:
            observed.append(out)
    return observed, failures


def scan_storage_location(theta_cs, variants: Sequence[Variant], plan: RunPlan,
                          jobs: int = 1) -> list[ScanResult]:
    """Imprint location against control area for each variant, with the analytic curve."""
    theta_cs = [float(x) for x in theta_cs]
    if not theta_cs:
        raise ValueError("empty theta_c range")
    tasks = [(th, v, plan) for v in variants for th in theta_cs]
    outcomes = _map(storage_location, tasks, jobs)
    out = []
    for k, v in enumerate(variants):
        observed, failures = _collect(outcomes[k * len(theta_cs):(k + 1) * len(theta_cs)])
        ref = [analytic_storage_location(th, v, plan.kappa0) for th in theta_cs]
        meta = {"gamma": v.gamma, "width": v.width, "mean": v.mean, "z_length": plan.z_length}
        out.append(ScanResult("theta_c", theta_cs, "location", observed, ref, meta, failures))
    return out


def _displacement(tau2, variant, plan, x1_target, x1):
    return run_displacement(tau2, variant, plan, x1_target, x1).displacement


def scan_displacement(tau2s, variants: Sequence[Variant], plan: RunPlan, x1_target: float = 5.0,
                      refine: bool = True, jobs: int = 1, xtol: float = 0.01) -> list[ScanResult]:
    """Displacement against the second control duration, with the analytic curve.

    When ``refine`` is set, an interior grid maximum is polished with a
    golden-section search bracketed by its neighbours and stored in
    ``metadata['peak_tau2']``/``metadata['peak_displacement']``.
    """
    tau2s = [float(x) for x in tau2s]
    if not tau2s:
        raise ValueError("empty tau2 range")
    out = []
    for v in variants:
        theta_c = ist.control_area_for_location(x1_target, v.kappa1(plan.kappa0))
        x1 = storage_location(theta_c, v, plan)
        observed, failures = _collect(_map(_displacement, [(t2, v, plan, x1_target, x1) for t2 in tau2s], jobs))
        ref = [analytic_displacement(t2, v, plan.kappa0) if t2 != 1.0 else math.inf for t2 in tau2s]
        meta = {"gamma": v.gamma, "width": v.width, "mean": v.mean, "theta_c": theta_c,
                "x1": x1, "z_length": plan.z_length}
        res = ScanResult("tau2", tau2s, "displacement", observed, ref, meta, failures)
        if refine:
            meta.update(_refine_peak(res, v, plan, x1_target, x1, xtol))
        out.append(res)
    return out


def _refine_peak(res: ScanResult, v, plan, x1_target, x1, xtol):
    obs = np.where(np.isfinite(res.observed), res.observed, -np.inf)
    i = int(np.argmax(obs))
    if not np.isfinite(obs[i]):
        return {"peak_tau2": math.nan, "peak_displacement": math.nan}
    lo = res.values[max(i - 1, 0)]
    hi = res.values[min(i + 1, res.values.size - 1)]

    def neg(t2):
        try:
            return -_displacement(t2, v, plan, x1_target, x1)
        except LambdaMemError:
            return math.inf

    mid = float(res.values[i])
    if i == 0 or i == res.values.size - 1:
        # maximum on the edge of the grid: nothing to bracket
        return {"peak_tau2": mid, "peak_displacement": float(obs[i])}
    best = minimize_scalar(neg, bracket=(lo, mid, hi), method="golden", tol=xtol / mid)
    if -best.fun >= obs[i]:
        return {"peak_tau2": float(best.x), "peak_displacement": float(-best.fun)}
    return {"peak_tau2": float(res.values[i]), "peak_displacement": float(obs[i])}


def write_scan_csv(path, result: ScanResult) -> None:
    """One row per scan point; fixed metadata is repeated as trailing columns."""
    meta_keys = sorted(result.metadata)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([result.parameter, result.observable, "analytic", "error", *meta_keys])
        for v, o, r, err in result.rows():
            w.writerow([repr(float(v)), repr(float(o)), repr(float(r)), err,
                        *(repr(result.metadata[k]) for k in meta_keys)])
