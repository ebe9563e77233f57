"""Continuum and discretization parameters, JSON config loading and validation."""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, fields
from pathlib import Path

SCHEMES = ("implicit-euler", "crank-nicolson")

PHYSICAL_KEYS = (
    "rho1", "rho2", "rho3", "k1", "k2", "gamma",
    "mu1", "mu2", "delta", "tau", "ell", "ell0",
)
DISCRETIZATION_KEYS = ("N", "M", "dt", "T", "scheme", "ic_preset")

DISCRETIZATION_DEFAULTS = {
    "N": 64,
    "M": 8,
    "dt": 0.01,
    "T": 10.0,
    "scheme": "crank-nicolson",
    "ic_preset": "sine-mode(1)",
}


class ConfigError(ValueError):
    """Raised when a configuration file cannot be parsed or fails validation."""


@dataclass(frozen=True)
class PhysicalParams:
    rho1: float
    rho2: float
    rho3: float
    k1: float
    k2: float
    gamma: float
    mu1: float
    mu2: float
    delta: float
    tau: float
    ell: float
    ell0: float

    def replace(self, **changes) -> "PhysicalParams":
        kw = {f.name: getattr(self, f.name) for f in fields(self)}
        kw.update(changes)
        return PhysicalParams(**kw)


@dataclass(frozen=True)
class DiscretizationParams:
    N: int = 64
    M: int = 8
    dt: float = 0.01
    T: float = 10.0
    scheme: str = "crank-nicolson"
    ic_preset: str = "sine-mode(1)"

    def replace(self, **changes) -> "DiscretizationParams":
        kw = {f.name: getattr(self, f.name) for f in fields(self)}
        kw.update(changes)
        return DiscretizationParams(**kw)


def damped_cells(ell: float, ell0: float, N: int) -> int | None:
    """Return N0 with ell0 = N0 * ell / N, or None when ell0 is not a grid node."""
    r = ell0 / ell * N
    n0 = round(r)
    if abs(r - n0) > 1e-9 * max(1.0, abs(r)):
        return None
    return int(n0)


def validate_params(p: PhysicalParams, d: DiscretizationParams | None = None) -> list[str]:
    """List every violated parameter rule; an empty list means the pair is valid."""
    report = []
    for name in ("rho1", "rho2", "rho3", "k1", "k2", "gamma", "mu1", "delta", "tau", "ell"):
        val = getattr(p, name)
        if not (isinstance(val, (int, float)) and math.isfinite(val) and val > 0):
            report.append(f"{name} must be a positive finite number")
    if not math.isfinite(p.mu2):
        report.append("mu2 must be finite")
    elif p.mu2 == 0:
        report.append("mu2 must be nonzero")
    if math.isfinite(p.mu1) and math.isfinite(p.mu2) and not abs(p.mu2) < p.mu1:
        report.append("|mu2| < mu1 violated")
    if not (0 < p.ell0 < p.ell):
        report.append("ell0 must lie strictly inside (0, ell)")
    if d is None:
        return report

    if not (isinstance(d.N, int) and d.N >= 4):
        report.append("N must be an integer >= 4")
    if not (isinstance(d.M, int) and d.M >= 2):
        report.append("M must be an integer >= 2")
    if not (math.isfinite(d.dt) and d.dt > 0):
        report.append("dt must be positive")
    if not (math.isfinite(d.T) and d.T > 0):
        report.append("T must be positive")
    if d.scheme not in SCHEMES:
        report.append(f"scheme must be one of {', '.join(SCHEMES)}")
    if not _preset_ok(d.ic_preset):
        report.append(f"unknown ic_preset {d.ic_preset!r}")
    if isinstance(d.N, int) and d.N >= 1 and 0 < p.ell0 < p.ell:
        n0 = damped_cells(p.ell, p.ell0, d.N)
        if n0 is None:
            report.append("ell0 not on grid")
        elif not 1 <= n0 <= d.N - 1:
            report.append("ell0 grid index must satisfy 1 <= N0 <= N-1")
    return report


_PRESET_RE = re.compile(r"^(zero|bump-damped|sine-mode\(\s*[1-9]\d*\s*\)|csv\(.+\))$")


def _preset_ok(name: str) -> bool:
    return isinstance(name, str) and bool(_PRESET_RE.match(name.strip()))


def parse_config(raw: dict) -> tuple[PhysicalParams, DiscretizationParams]:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - set(PHYSICAL_KEYS) - set(DISCRETIZATION_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    missing = [k for k in PHYSICAL_KEYS if k not in raw]
    if missing:
        raise ConfigError(f"missing config keys: {missing}")
    phys = {}
    for k in PHYSICAL_KEYS:
        v = raw[k]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{k} must be a number")
        phys[k] = float(v)
    disc = dict(DISCRETIZATION_DEFAULTS)
    disc.update({k: raw[k] for k in DISCRETIZATION_KEYS if k in raw})
    for k in ("N", "M"):
        v = disc[k]
        if isinstance(v, float) and v.is_integer():
            v = int(v)
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"{k} must be an integer")
        disc[k] = v
    for k in ("dt", "T"):
        if isinstance(disc[k], bool) or not isinstance(disc[k], (int, float)):
            raise ConfigError(f"{k} must be a number")
        disc[k] = float(disc[k])
    for k in ("scheme", "ic_preset"):
        if not isinstance(disc[k], str):
            raise ConfigError(f"{k} must be a string")
    p = PhysicalParams(**phys)
    d = DiscretizationParams(**disc)
    report = validate_params(p, d)
    if report:
        raise ConfigError("; ".join(report))
    return p, d


def load_config(path) -> tuple[PhysicalParams, DiscretizationParams]:
    """Read a JSON config file and return the validated parameter pair."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return parse_config(raw)


def default_params() -> tuple[PhysicalParams, DiscretizationParams]:
    """Reference coefficients: unit values except k1 = 2, mu2 = 0.5, ell0 = ell/2.

    k1 != k2 keeps the two wave speeds distinct; equal speeds leave the lowest
    beam modes damped only at the 1e-3 level.
    """
    p = PhysicalParams(
        rho1=1.0, rho2=1.0, rho3=1.0, k1=2.0, k2=1.0, gamma=1.0,
        mu1=1.0, mu2=0.5, delta=1.0, tau=1.0, ell=1.0, ell0=0.5,
    )
    return p, DiscretizationParams()


def to_dict(p: PhysicalParams, d: DiscretizationParams) -> dict:
    out = {k: getattr(p, k) for k in PHYSICAL_KEYS}
    out.update({k: getattr(d, k) for k in DISCRETIZATION_KEYS})
    return out
