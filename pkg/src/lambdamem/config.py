"""Run configuration: JSON schema, validation and round-trip serialization.

A configuration is a JSON object with these sections, all optional except
where a subcommand needs them (see README for the full key list)::

    solitons  list of {"xi", "tau", "c1", "c2"}; complex values as [re, im]
    doppler   {"width": tau/T2*, "mean": tau*Delta_bar, "n_nodes"}
    medium    {"kappa0", "gamma": tau*Gamma, "z_length": kappa0*Z, "populations": [p1, p2, p3]}
    grid      {"dt", "dz", "clamp", "t_window": [t_min, t_max], "order", "doppler_nodes"}
    boundary  {"kind": "solitons"} or
              {"kind": "storage", "theta_c_pi", "center", "controls": [{"tau", "center"}]}
    scan      {"kind": "storage", "theta_c_pi": [...], "variants": [...]} or
              {"kind": "displacement", "tau2": [...], "x1": 5.0, "variants": [...], "refine": true}
    coeffs    {"widths": [...], "means": [...]}
    output    {"slices_z": [...]}

Every value is in the nondimensional groups tau_1 = 1, kappa0 Z, theta/pi.
``validate_config`` reports every problem at once through ``ConfigError``.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field

from .analysis import RunPlan, Variant
from .core import (DopplerSpec, MediumConfig, NormingConstantInit, SolverSettings,
                   SpectralParameter, ground_state)
from .errors import ConfigError, ConfigIssue

SECTIONS = ("solitons", "doppler", "medium", "grid", "boundary", "scan", "coeffs", "output")


@dataclass(frozen=True)
class ControlPulseSpec:
    tau: float
    center: float


@dataclass(frozen=True)
class BoundarySpec:
    kind: str = "solitons"
    theta_c_pi: float = 0.05
    center: float = 0.0
    controls: tuple[ControlPulseSpec, ...] = ()


@dataclass(frozen=True)
class ScanSpec:
    kind: str
    values: tuple[float, ...]
    variants: tuple[Variant, ...] = (Variant(),)
    x1: float = 5.0
    refine: bool = True


@dataclass(frozen=True)
class RunConfig:
    solitons: tuple[tuple[SpectralParameter, NormingConstantInit], ...] = ()
    doppler_width: float = 0.0
    doppler_mean: float = 0.0
    doppler_nodes: int = 64
    medium: MediumConfig = field(default_factory=MediumConfig)
    settings: SolverSettings = field(default_factory=SolverSettings)
    boundary: BoundarySpec | None = None
    scan: ScanSpec | None = None
    coeff_widths: tuple[float, ...] = (0.0, 0.5, 1.0, 2.0, 4.0, 16.0)
    coeff_means: tuple[float, ...] = (0.0,)
    slices_z: tuple[float, ...] = ()

    @property
    def doppler(self) -> DopplerSpec:
        return DopplerSpec.from_width(self.doppler_width, self.doppler_mean, self.doppler_nodes)

    @property
    def params(self):
        return [p for p, _ in self.solitons]

    @property
    def inits(self):
        return [c for _, c in self.solitons]

    def plan(self) -> RunPlan:
        return RunPlan(z_length=self.medium.z_length, kappa0=self.medium.kappa0, settings=self.settings)

    def to_dict(self) -> dict:
        return config_to_dict(self)

    def digest(self) -> str:
        return config_hash(self)


class _Collector:
    """Reads typed values out of a nested dict while recording every problem."""

    def __init__(self):
        self.issues: list[ConfigIssue] = []

    def add(self, code, name, msg):
        self.issues.append(ConfigIssue(code, name, msg))

    def section(self, cfg, name, kind=dict):
        val = cfg.get(name)
        if val is None:
            return None
        if not isinstance(val, kind):
            self.add("BadType", name, f"expected {kind.__name__}")
            return None
        return val

    def real(self, d, key, name, default=None, allow_inf=False):
        if key not in d:
            if default is None:
                self.add("MissingField", name, "required")
            return default
        val = d[key]
        if val in ("inf", "Infinity") and allow_inf:
            return math.inf
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            self.add("BadType", name, f"expected a number, got {val!r}")
            return default
        val = float(val)
        if math.isnan(val) or (math.isinf(val) and not allow_inf):
            self.add("BadType", name, "must be finite")
            return default
        return val

    def integer(self, d, key, name, default):
        val = d.get(key, default)
        if isinstance(val, bool) or not isinstance(val, int):
            self.add("BadType", name, f"expected an integer, got {val!r}")
            return default
        return val

    def complex(self, d, key, name, default=0j):
        if key not in d:
            return default
        val = d[key]
        if isinstance(val, (int, float)) and not isinstance(val, bool):
            return complex(val)
        if (isinstance(val, list) and len(val) == 2
                and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in val)):
            return complex(val[0], val[1])
        self.add("BadType", name, f"expected a number or [re, im], got {val!r}")
        return 0j

    def reals(self, d, key, name):
        val = d.get(key)
        if val is None:
            self.add("MissingField", name, "required")
            return ()
        if not isinstance(val, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in val):
            self.add("BadType", name, "expected a list of numbers")
            return ()
        return tuple(float(x) for x in val)

    def build(self, ctor, prefix, *args, **kwargs):
        """Construct a validated core type, re-homing its issues under ``prefix``."""
        try:
            return ctor(*args, **kwargs)
        except ConfigError as exc:
            for i in exc.issues:
                self.add(i.code, f"{prefix}.{i.field}", i.message)
            return None

    def unknown(self, d, allowed, prefix):
        for key in d:
            if key not in allowed:
                self.add("UnknownKey", f"{prefix}.{key}" if prefix else key, "not a recognized key")


def _variants(col, raw, prefix):
    if raw is None:
        return (Variant(),)
    if not isinstance(raw, list) or not raw:
        col.add("BadType", prefix, "expected a non-empty list of variants")
        return ()
    out = []
    for i, v in enumerate(raw):
        name = f"{prefix}[{i}]"
        if not isinstance(v, dict):
            col.add("BadType", name, "expected an object")
            continue
        col.unknown(v, ("gamma", "width", "mean"), name)
        g = col.real(v, "gamma", f"{name}.gamma", 0.0)
        w = col.real(v, "width", f"{name}.width", 0.0)
        m = col.real(v, "mean", f"{name}.mean", 0.0)
        if g < 0:
            col.add("NegativeGamma", f"{name}.gamma", "decay rate must be >= 0")
        if w < 0:
            col.add("BadGrid", f"{name}.width", "Doppler width must be >= 0")
        out.append(Variant(g, w, m))
    return tuple(out)


def validate_config(cfg: dict) -> RunConfig:
    """Check a raw configuration mapping and build a ``RunConfig``.

    Raises ``ConfigError`` listing every issue found.
    """
    col = _Collector()
    if not isinstance(cfg, dict):
        raise ConfigError([ConfigIssue("BadType", "<root>", "configuration must be a JSON object")])
    col.unknown(cfg, SECTIONS, "")

    solitons = []
    raw = cfg.get("solitons", [])
    if not isinstance(raw, list):
        col.add("BadType", "solitons", "expected a list")
        raw = []
    for i, s in enumerate(raw):
        name = f"solitons[{i}]"
        if not isinstance(s, dict):
            col.add("BadType", name, "expected an object")
            continue
        col.unknown(s, ("xi", "tau", "c1", "c2"), name)
        xi = col.real(s, "xi", f"{name}.xi", 0.0)
        tau = col.real(s, "tau", f"{name}.tau", 1.0)
        c1 = col.complex(s, "c1", f"{name}.c1", 1 + 0j)
        c2 = col.complex(s, "c2", f"{name}.c2")
        p = col.build(SpectralParameter, name, xi, tau)
        c = col.build(NormingConstantInit, name, c1, c2)
        if p is not None and c is not None:
            solitons.append((p, c))
    lams = [p.lam for p, _ in solitons]
    if len(set(lams)) != len(lams):
        col.add("BadGrid", "solitons", "spectral parameters must be pairwise distinct")

    dop = col.section(cfg, "doppler") or {}
    col.unknown(dop, ("width", "mean", "n_nodes"), "doppler")
    width = col.real(dop, "width", "doppler.width", 0.0)
    mean = col.real(dop, "mean", "doppler.mean", 0.0)
    n_nodes = col.integer(dop, "n_nodes", "doppler.n_nodes", 64)
    if width < 0:
        col.add("BadGrid", "doppler.width", "Doppler width must be >= 0")
    if n_nodes < 1:
        col.add("BadGrid", "doppler.n_nodes", "need at least one node")

    med = col.section(cfg, "medium") or {}
    col.unknown(med, ("kappa0", "gamma", "z_length", "populations"), "medium")
    pops = med.get("populations", [1.0, 0.0, 0.0])
    if (not isinstance(pops, list) or len(pops) != 3
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in pops)):
        col.add("BadType", "medium.populations", "expected three numbers")
        pops = [1.0, 0.0, 0.0]
    elif any(x < 0 for x in pops) or abs(sum(pops) - 1.0) > 1e-12:
        col.add("BadGrid", "medium.populations", "populations must be >= 0 and sum to 1")
        pops = [1.0, 0.0, 0.0]
    medium = col.build(MediumConfig, "medium",
                       kappa0=col.real(med, "kappa0", "medium.kappa0", 1.0),
                       gamma=col.real(med, "gamma", "medium.gamma", 0.0),
                       z_length=col.real(med, "z_length", "medium.z_length", 10.0),
                       initial_state=ground_state(tuple(float(x) for x in pops)))

    grid = col.section(cfg, "grid") or {}
    col.unknown(grid, ("dt", "dz", "clamp", "t_window", "order", "doppler_nodes"), "grid")
    window = grid.get("t_window", [-20.0, 40.0])
    if (not isinstance(window, list) or len(window) != 2
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in window)):
        col.add("BadType", "grid.t_window", "expected [t_min, t_max]")
        window = [-20.0, 40.0]
    settings = col.build(SolverSettings, "grid",
                         dt=col.real(grid, "dt", "grid.dt", 0.02),
                         dz=col.real(grid, "dz", "grid.dz", 0.02),
                         clamp_threshold=col.real(grid, "clamp", "grid.clamp", 1e-5),
                         t_window=(float(window[0]), float(window[1])),
                         order=col.integer(grid, "order", "grid.order", 4),
                         doppler_nodes=col.integer(grid, "doppler_nodes", "grid.doppler_nodes", 32))

    boundary = None
    bnd = col.section(cfg, "boundary")
    if bnd is not None:
        col.unknown(bnd, ("kind", "theta_c_pi", "center", "controls"), "boundary")
        kind = bnd.get("kind", "solitons")
        controls = []
        for i, c in enumerate(bnd.get("controls", []) if isinstance(bnd.get("controls", []), list) else []):
            name = f"boundary.controls[{i}]"
            if not isinstance(c, dict):
                col.add("BadType", name, "expected an object")
                continue
            col.unknown(c, ("tau", "center"), name)
            tau = col.real(c, "tau", f"{name}.tau")
            if tau is not None and tau <= 0:
                col.add("NonPositiveTau", f"{name}.tau", "pulse duration must be > 0")
            controls.append(ControlPulseSpec(tau or 1.0, col.real(c, "center", f"{name}.center", 15.0)))
        theta = col.real(bnd, "theta_c_pi", "boundary.theta_c_pi", 0.05)
        if kind not in ("solitons", "storage"):
            col.add("BadType", "boundary.kind", "expected 'solitons' or 'storage'")
        elif kind == "solitons" and not solitons:
            col.add("MissingField", "solitons", "boundary kind 'solitons' needs at least one soliton")
        if kind == "storage" and not 0 < theta < 2:
            col.add("NonPositiveArea", "boundary.theta_c_pi", "control area must lie in (0, 2) pi")
        boundary = BoundarySpec(kind, theta, col.real(bnd, "center", "boundary.center", 0.0), tuple(controls))

    scan = None
    sc = col.section(cfg, "scan")
    if sc is not None:
        kind = sc.get("kind")
        if kind == "storage":
            col.unknown(sc, ("kind", "theta_c_pi", "variants"), "scan")
            values = col.reals(sc, "theta_c_pi", "scan.theta_c_pi")
            if any(not 0 < v < 2 for v in values):
                col.add("NonPositiveArea", "scan.theta_c_pi", "control areas must lie in (0, 2) pi")
            scan = ScanSpec("storage", values, _variants(col, sc.get("variants"), "scan.variants"))
        elif kind == "displacement":
            col.unknown(sc, ("kind", "tau2", "x1", "variants", "refine"), "scan")
            values = col.reals(sc, "tau2", "scan.tau2")
            if any(v <= 0 for v in values):
                col.add("NonPositiveTau", "scan.tau2", "durations must be > 0")
            refine = sc.get("refine", True)
            if not isinstance(refine, bool):
                col.add("BadType", "scan.refine", "expected true or false")
                refine = True
            scan = ScanSpec("displacement", values, _variants(col, sc.get("variants"), "scan.variants"),
                            col.real(sc, "x1", "scan.x1", 5.0), refine)
        else:
            col.add("BadType", "scan.kind", "expected 'storage' or 'displacement'")

    co = col.section(cfg, "coeffs") or {}
    col.unknown(co, ("widths", "means"), "coeffs")
    widths = col.reals(co, "widths", "coeffs.widths") if "widths" in co else RunConfig.coeff_widths
    means = col.reals(co, "means", "coeffs.means") if "means" in co else RunConfig.coeff_means
    if any(w < 0 for w in widths):
        col.add("BadGrid", "coeffs.widths", "widths must be >= 0")

    out = col.section(cfg, "output") or {}
    col.unknown(out, ("slices_z",), "output")
    slices = col.reals(out, "slices_z", "output.slices_z") if "slices_z" in out else ()

    if col.issues:
        raise ConfigError(col.issues)
    return RunConfig(tuple(solitons), width, mean, n_nodes, medium, settings, boundary, scan,
                     widths, means, slices)


def _cpair(c: complex) -> list[float]:
    return [float(c.real), float(c.imag)]


def config_to_dict(cfg: RunConfig) -> dict:
    """Inverse of ``validate_config``: every field written out explicitly."""
    m, s = cfg.medium, cfg.settings
    out = {
        "solitons": [{"xi": p.xi, "tau": p.tau, "c1": _cpair(c.c1), "c2": _cpair(c.c2)}
                     for p, c in cfg.solitons],
        "doppler": {"width": cfg.doppler_width, "mean": cfg.doppler_mean, "n_nodes": cfg.doppler_nodes},
        "medium": {"kappa0": m.kappa0, "gamma": m.gamma, "z_length": m.z_length,
                   "populations": [float(x) for x in m.initial_state.diagonal().real]},
        "grid": {"dt": s.dt, "dz": s.dz, "clamp": s.clamp_threshold, "t_window": list(s.t_window),
                 "order": s.order, "doppler_nodes": s.doppler_nodes},
        "coeffs": {"widths": list(cfg.coeff_widths), "means": list(cfg.coeff_means)},
        "output": {"slices_z": list(cfg.slices_z)},
    }
    if cfg.boundary is not None:
        b = cfg.boundary
        out["boundary"] = {"kind": b.kind, "theta_c_pi": b.theta_c_pi, "center": b.center,
                           "controls": [asdict(c) for c in b.controls]}
    if cfg.scan is not None:
        sc = cfg.scan
        key = "theta_c_pi" if sc.kind == "storage" else "tau2"
        out["scan"] = {"kind": sc.kind, key: list(sc.values), "variants": [asdict(v) for v in sc.variants]}
        if sc.kind == "displacement":
            out["scan"].update(x1=sc.x1, refine=sc.refine)
    return out


def dumps(cfg: RunConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2, sort_keys=True)


def loads(text: str) -> RunConfig:
    return validate_config(json.loads(text))


def load(path) -> RunConfig:
    with open(path) as fh:
        return loads(fh.read())


def config_hash(cfg: RunConfig) -> str:
    """SHA-256 of the canonical JSON form; equal configs hash equally."""
    canon = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()
