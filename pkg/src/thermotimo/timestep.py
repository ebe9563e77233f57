"""Initial states and unconditionally stable one-step integration of Phi' = A Phi."""

from __future__ import annotations

import csv
import re
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .energy import EnergySeries, StateVector, energy, graph_norm
from .mesh import Mesh
from .params import DiscretizationParams, PhysicalParams

_SINE_RE = re.compile(r"^sine-mode\(\s*(\d+)\s*\)$")
_CSV_RE = re.compile(r"^csv\((.+)\)$")


def _bump(x: np.ndarray, a: float, b: float) -> np.ndarray:
    """C-infinity bump supported on (a, b) with peak value 1."""
    r = (2.0 * x - (a + b)) / (b - a)
    out = np.zeros_like(x, dtype=float)
    inside = np.abs(r) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
    return out


def _read_state_csv(path: str) -> np.ndarray:
    values = []
    with Path(path).open(newline="") as fh:
        for row in csv.reader(fh):
            if not row or not row[0].strip():
                continue
            try:
                values.append(float(row[-1]))
            except ValueError:
                if values:
                    raise
                # header line
    return np.asarray(values)


def init_state(preset: str, p: PhysicalParams, m: Mesh, history=None) -> StateVector:
    """Build the initial state for a named preset.

    Presets: ``zero``; ``sine-mode(j)`` with phi = sin(j pi x/ell), psi = phi/2,
    q = sin(pi x/ell0)/2; ``bump-damped`` with smooth bumps in u and theta inside
    (0, ell0); ``csv(path)`` reading the flat state vector, one value per row.

    The delay levels are filled from the q-history ``history(x, t)`` sampled at
    t = -s_k tau; the default history is constant in time and equal to q0.
    """
    preset = preset.strip()
    phi = StateVector.zeros(m)
    if preset == "zero":
        return phi
    csv_match = _CSV_RE.match(preset)
    if csv_match:
        data = _read_state_csv(csv_match.group(1).strip())
        if data.size != m.dim:
            raise ValueError(f"CSV state has {data.size} values, mesh needs {m.dim}")
        return StateVector(data, m)

    x = m.x_interior
    sine = _SINE_RE.match(preset)
    if sine:
        j = int(sine.group(1))
        if j < 1:
            raise ValueError("sine-mode index must be >= 1")
        phi.phi[:] = np.sin(j * np.pi * x / p.ell)
        phi.psi[:] = 0.5 * np.sin(j * np.pi * x / p.ell)
        phi.q[:] = 0.5 * np.sin(np.pi * m.x_q / p.ell0)
    elif preset == "bump-damped":
        a, b = 0.25 * p.ell0, 0.75 * p.ell0
        phi.u[:] = _bump(x, a, b)
        phi.theta[:] = _bump(m.x_theta, a, b)
    else:
        raise ValueError(f"unknown initial-condition preset {preset!r}")

    q0 = phi.q.copy()
    if history is None:
        phi.z[:] = q0[:, None]
    else:
        xs, ss = np.meshgrid(m.x_q, m.s, indexing="ij")
        phi.z[:] = history(xs, -ss * p.tau)
    return phi


def _factor(gen, dt: float, scheme: str):
    if scheme == "implicit-euler":
        eta = dt
    elif scheme == "crank-nicolson":
        eta = 0.5 * dt
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    ident = sp.identity(gen.dim, format="csc")
    return gen.factor(("step", scheme, float(dt)), lambda: ident - eta * gen.A)


def _solve_real(lu, b: np.ndarray) -> np.ndarray:
    if np.iscomplexobj(b):
        return lu.solve(np.ascontiguousarray(b.real)) + 1j * lu.solve(np.ascontiguousarray(b.imag))
    return lu.solve(b)


def step(gen, phi, dt: float, scheme: str = "crank-nicolson", matrix=None):
    """Advance one step. ``matrix`` replaces A (factor is then not cached)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    x = np.asarray(phi)
    if matrix is None:
        lu = _factor(gen, dt, scheme)
        A = gen.A
    else:
        from scipy.sparse.linalg import splu
        A = matrix
        eta = dt if scheme == "implicit-euler" else 0.5 * dt
        lu = splu((sp.identity(gen.dim, format="csc") - eta * A).tocsc())
    rhs = x if scheme == "implicit-euler" else x + 0.5 * dt * (A @ x)
    out = _solve_real(lu, rhs)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("time step produced non-finite values")
    return StateVector(out, phi.mesh) if isinstance(phi, StateVector) else out


def _q_norm2(gen, x: np.ndarray) -> float:
    q = x[gen.mesh.layout.slice("q")]
    return float(np.sum(gen.mesh.q_weights * np.abs(q) ** 2))


def simulate(gen, phi0, d: DiscretizationParams, return_state: bool = False):
    """Integrate to the horizon d.T with step d.dt and record (t, E, D) at every step.

    The summary holds E(T), the supremum of t E(t) / ||Phi0||_{D(A)}^2 and whether E
    stayed nonincreasing (up to 1e-13 relative rounding).
    """
    x = np.array(phi0, copy=True)
    n_steps = int(round(d.T / d.dt))
    if n_steps < 1:
        raise ValueError("horizon shorter than one step")
    p = gen.params
    damp = p.mu1 - abs(p.mu2)
    lu = _factor(gen, d.dt, d.scheme)
    half = 0.5 * d.dt
    t = np.arange(n_steps + 1) * d.dt
    E = np.empty(n_steps + 1)
    D = np.empty(n_steps + 1)
    E[0] = energy(x, gen)
    D[0] = damp * _q_norm2(gen, x)
    cn = d.scheme == "crank-nicolson"
    for n in range(1, n_steps + 1):
        rhs = x + half * (gen.A @ x) if cn else x
        x = _solve_real(lu, rhs)
        E[n] = energy(x, gen)
        D[n] = damp * _q_norm2(gen, x)
    if not np.all(np.isfinite(E)):
        raise FloatingPointError("simulation produced non-finite energy")
    gn = graph_norm(gen, phi0)
    sup_te = float(np.max(t * E) / gn**2) if gn > 0 else 0.0
    monotone = bool(np.all(np.diff(E) <= 1e-13 * E[:-1] + 1e-300))
    series = EnergySeries(t, E, D, summary={
        "E_final": float(E[-1]),
        "sup_tE": sup_te,
        "monotone": monotone,
    })
    return (series, x) if return_state else series
