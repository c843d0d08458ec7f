"""Declarative run configuration (YAML, nested key-value).

Every validation failure raises ConfigError naming the offending field,
so `qlinresp validate-config` can point at the exact key.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import yaml

from .errors import ConfigError

__all__ = ["RunConfig", "ObservableSpec", "load_config", "parse_config"]

_PREP_MODES = ("exact", "gamma", "rus")
_CHANNELS = ("cos", "sin")
_SPIN_MODES = ("charge", "spin")
_SPINS = ("up", "dn")
_OBSERVABLE_KINDS = ("n1", "n2", "n2_conditional")


@dataclass(frozen=True)
class ObservableSpec:
    kind: str
    a: tuple[int, int, str]           # (kx, ky, spin)
    b: tuple[int, int, str] | None = None

    def label(self) -> str:
        def mode(m):
            return f"(k=({m[0]},{m[1]}),{m[2]})"
        if self.b is None:
            return f"{self.kind}{mode(self.a)}"
        return f"{self.kind}{mode(self.a)}{mode(self.b)}"


@dataclass(frozen=True)
class RunConfig:
    # geometry / model
    lx: int
    ly: int
    periodic_x: bool
    periodic_y: bool
    t: float
    u: float
    n_up: int
    n_dn: int
    # excitation operator
    exc_kx: int
    exc_ky: int
    channel: str
    spin_mode: str
    # state preparation
    prep_mode: str
    gamma: float | None
    delta_s: float | None
    c_const: float
    max_rounds: int
    # phase estimation register (exactly one of the two)
    w_qubits: int | None
    delta_omega: float | None
    # sampling budget (exactly one of n / (delta, epsilon))
    n_samples: int | None
    delta: float | None
    epsilon: float | None
    # final-state stage
    observables: tuple[ObservableSpec, ...] = ()
    shots: int = 0
    evolve_time: float = 0.0
    y_outcomes: tuple[int, ...] | None = None
    top_k: int = 1
    # numerics
    dense_cap: int = 5000
    krylov_fallback: bool = False
    # run control
    seed: int = 0
    out_dir: str = "out"
    exact_only: bool = False
    amplify: bool = False


def _need(section: dict, key: str, where: str):
    if key not in section:
        raise ConfigError(f"missing required field {where}.{key}",
                          field=f"{where}.{key}")
    return section[key]


def _opt(section: dict, key: str, default):
    return section.get(key, default)


def _parse_observable(entry: dict, where: str) -> ObservableSpec:
    kind = _need(entry, "kind", where)
    if kind not in _OBSERVABLE_KINDS:
        raise ConfigError(f"{where}.kind must be one of {_OBSERVABLE_KINDS}",
                          field=f"{where}.kind", value=kind)

    def mode(section, label):
        spin = _opt(section, "spin", "up")
        if spin not in _SPINS:
            raise ConfigError(f"{label}.spin must be 'up' or 'dn'",
                              field=f"{label}.spin", value=spin)
        return (int(_need(section, "kx", label)),
                int(_need(section, "ky", label)), spin)

    a = mode(_need(entry, "a", where), f"{where}.a")
    b = None
    if kind != "n1":
        b = mode(_need(entry, "b", where), f"{where}.b")
    return ObservableSpec(kind=kind, a=a, b=b)


def parse_config(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping", field="<root>")
    geom = _need(raw, "geometry", "<root>")
    params = _need(raw, "params", "<root>")
    sector = _need(raw, "sector", "<root>")
    exc = _need(raw, "excitation", "<root>")
    prep = _need(raw, "prep", "<root>")
    pea = _need(raw, "pea", "<root>")
    sampling = _need(raw, "sampling", "<root>")
    fstate = _opt(raw, "finalstate", {}) or {}
    spectral = _opt(raw, "spectral", {}) or {}
    mode = _opt(raw, "mode", {}) or {}
    output = _opt(raw, "output", {}) or {}

    lx = int(_need(geom, "lx", "geometry"))
    ly = int(_need(geom, "ly", "geometry"))
    if lx < 1 or ly < 1:
        raise ConfigError("geometry.lx and geometry.ly must be >= 1",
                          field="geometry.lx", lx=lx, ly=ly)
    periodic = bool(_opt(geom, "periodic", True))
    cfg_t = float(_need(params, "t", "params"))
    cfg_u = float(_need(params, "u", "params"))
    n_up = int(_need(sector, "n_up", "sector"))
    n_dn = int(_need(sector, "n_dn", "sector"))
    if n_up < 0 or n_dn < 0:
        raise ConfigError("sector particle counts must be nonnegative",
                          field="sector.n_up", n_up=n_up, n_dn=n_dn)
    if n_up > lx * ly or n_dn > lx * ly:
        raise ConfigError("sector particle count exceeds the site count",
                          field="sector.n_up", n_up=n_up, n_dn=n_dn,
                          sites=lx * ly)

    channel = _opt(exc, "channel", "cos")
    if channel not in _CHANNELS:
        raise ConfigError("excitation.channel must be 'cos' or 'sin'",
                          field="excitation.channel", value=channel)
    spin_mode = _opt(exc, "spin_mode", "charge")
    if spin_mode not in _SPIN_MODES:
        raise ConfigError("excitation.spin_mode must be 'charge' or 'spin'",
                          field="excitation.spin_mode", value=spin_mode)

    prep_mode = _opt(prep, "mode", "exact")
    if prep_mode not in _PREP_MODES:
        raise ConfigError(f"prep.mode must be one of {_PREP_MODES}",
                          field="prep.mode", value=prep_mode)
    gamma = prep.get("gamma")
    delta_s = prep.get("delta_s")
    if prep_mode in ("gamma", "rus") and gamma is None and delta_s is None:
        raise ConfigError("prep.gamma or prep.delta_s is required for "
                          f"mode '{prep_mode}'", field="prep.gamma")
    if gamma is not None and not gamma > 0:
        raise ConfigError("prep.gamma must be positive", field="prep.gamma",
                          value=gamma)
    if delta_s is not None and not (0 < delta_s < 1):
        raise ConfigError("prep.delta_s must lie in (0, 1)",
                          field="prep.delta_s", value=delta_s)

    w_qubits = pea.get("w")
    delta_omega = pea.get("delta_omega")
    if (w_qubits is None) == (delta_omega is None):
        raise ConfigError("exactly one of pea.w and pea.delta_omega must be set",
                          field="pea.w")
    if w_qubits is not None and not (1 <= int(w_qubits) <= 24):
        raise ConfigError("pea.w must lie in [1, 24]", field="pea.w",
                          value=w_qubits)
    if delta_omega is not None and not delta_omega > 0:
        raise ConfigError("pea.delta_omega must be positive",
                          field="pea.delta_omega", value=delta_omega)

    n_samples = sampling.get("n")
    s_delta = sampling.get("delta")
    s_eps = sampling.get("epsilon")
    if (n_samples is None) == (s_delta is None and s_eps is None):
        raise ConfigError("exactly one of sampling.n and "
                          "sampling.(delta, epsilon) must be set",
                          field="sampling.n")
    if n_samples is None and (s_delta is None or s_eps is None):
        raise ConfigError("sampling.delta and sampling.epsilon go together",
                          field="sampling.delta")
    if n_samples is not None and int(n_samples) < 1:
        raise ConfigError("sampling.n must be >= 1", field="sampling.n",
                          value=n_samples)
    for nm, v in (("delta", s_delta), ("epsilon", s_eps)):
        if v is not None and not (0 < v < 1):
            raise ConfigError(f"sampling.{nm} must lie in (0, 1)",
                              field=f"sampling.{nm}", value=v)

    observables = tuple(
        _parse_observable(entry, f"finalstate.observables[{i}]")
        for i, entry in enumerate(_opt(fstate, "observables", []) or []))
    y_raw = fstate.get("y")
    y_outcomes = tuple(int(v) for v in y_raw) if y_raw is not None else None

    for nm, v in (("params.t", cfg_t), ("params.u", cfg_u)):
        if not math.isfinite(v):
            raise ConfigError(f"{nm} must be finite", field=nm, value=v)

    return RunConfig(
        lx=lx, ly=ly, periodic_x=bool(_opt(geom, "periodic_x", periodic)),
        periodic_y=bool(_opt(geom, "periodic_y", periodic)),
        t=cfg_t, u=cfg_u, n_up=n_up, n_dn=n_dn,
        exc_kx=int(_opt(exc, "kx", 0)), exc_ky=int(_opt(exc, "ky", 0)),
        channel=channel, spin_mode=spin_mode,
        prep_mode=prep_mode,
        gamma=float(gamma) if gamma is not None else None,
        delta_s=float(delta_s) if delta_s is not None else None,
        c_const=float(_opt(prep, "c", 1.0)),
        max_rounds=int(_opt(prep, "max_rounds", 64)),
        w_qubits=int(w_qubits) if w_qubits is not None else None,
        delta_omega=float(delta_omega) if delta_omega is not None else None,
        n_samples=int(n_samples) if n_samples is not None else None,
        delta=float(s_delta) if s_delta is not None else None,
        epsilon=float(s_eps) if s_eps is not None else None,
        observables=observables,
        shots=int(_opt(fstate, "shots", 0)),
        evolve_time=float(_opt(fstate, "evolve_time", 0.0)),
        y_outcomes=y_outcomes,
        top_k=int(_opt(fstate, "top_k", 1)),
        dense_cap=int(_opt(spectral, "dense_cap", 5000)),
        krylov_fallback=bool(_opt(spectral, "krylov_fallback", False)),
        seed=int(_opt(raw, "seed", 0)),
        out_dir=str(_opt(output, "dir", "out")),
        exact_only=bool(_opt(mode, "exact_only", False)),
        amplify=bool(_opt(mode, "amplify", False)),
    )


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}", field="--config")
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}", field="<file>")
    return parse_config(raw)
