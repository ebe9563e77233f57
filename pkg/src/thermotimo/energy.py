"""Discrete energy inner product, energy, graph norm and energy time series."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .mesh import BLOCKS, DofLayout, Mesh


class StateVector:
    """Flat coefficient vector with named block views.

    Block attributes (``phi``, ``u``, ``psi``, ``v``, ``theta``, ``q``) are numpy
    views into ``data``; ``z`` is an (N0, M) view, x-major.
    """

    __slots__ = ("data", "mesh")

    def __init__(self, data, mesh: Mesh):
        data = np.asarray(data)
        if data.shape != (mesh.dim,):
            raise ValueError(f"state length {data.shape} does not match mesh dim {mesh.dim}")
        self.data = data
        self.mesh = mesh

    @classmethod
    def zeros(cls, mesh: Mesh, dtype=float) -> "StateVector":
        return cls(np.zeros(mesh.dim, dtype=dtype), mesh)

    @property
    def layout(self) -> DofLayout:
        return self.mesh.layout

    def block(self, name: str) -> np.ndarray:
        view = self.data[self.layout.slice(name)]
        if name == "z":
            return view.reshape(self.mesh.N0, self.mesh.M)
        return view

    phi = property(lambda self: self.block("phi"))
    u = property(lambda self: self.block("u"))
    psi = property(lambda self: self.block("psi"))
    v = property(lambda self: self.block("v"))
    theta = property(lambda self: self.block("theta"))
    q = property(lambda self: self.block("q"))
    z = property(lambda self: self.block("z"))

    def copy(self) -> "StateVector":
        return StateVector(self.data.copy(), self.mesh)

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)

    def __len__(self) -> int:
        return self.data.shape[0]

    def __repr__(self) -> str:
        return f"StateVector(dim={self.mesh.dim}, dtype={self.data.dtype})"


def _blocks(x, mesh: Mesh) -> dict[str, np.ndarray]:
    s = x if isinstance(x, StateVector) else StateVector(np.asarray(x), mesh)
    return {name: s.block(name) for name in BLOCKS}


def _pad(f: np.ndarray) -> np.ndarray:
    return np.concatenate([[0.0], f, [0.0]])


def _context(a, b, mesh, p):
    for s in (a, b):
        if mesh is None and isinstance(s, StateVector):
            mesh = s.mesh
    if mesh is None:
        raise ValueError("pass StateVectors or an explicit mesh")
    for s in (a, b):
        if isinstance(s, StateVector) and s.mesh != mesh:
            raise ValueError("states live on different meshes")
    p = p if p is not None else mesh.params
    if p is None:
        raise ValueError("mesh carries no parameters; pass p explicitly")
    return mesh, p


def energy_terms(a, b, mesh: Mesh | None = None, p=None) -> dict[str, complex]:
    """The seven weighted quadrature terms of <a, b>_h, one per inner-product term."""
    mesh, p = _context(a, b, mesh, p)
    A, B = _blocks(a, mesh), _blocks(b, mesh)
    dx = mesh.dx
    w = mesh.q_weights

    def strain(s):
        phi, psi = _pad(s["phi"]), _pad(s["psi"])
        return np.diff(phi) / dx + 0.5 * (psi[1:] + psi[:-1])

    def slope(f):
        return np.diff(_pad(f)) / dx

    return {
        "shear": p.k1 * dx * np.sum(strain(A) * np.conj(strain(B))),
        "u": p.rho1 * dx * np.sum(A["u"] * np.conj(B["u"])),
        "bending": p.k2 * dx * np.sum(slope(A["psi"]) * np.conj(slope(B["psi"]))),
        "v": p.rho2 * dx * np.sum(A["v"] * np.conj(B["v"])),
        "theta": p.rho3 * dx * np.sum(A["theta"] * np.conj(B["theta"])),
        "q": p.gamma * np.sum(w * A["q"] * np.conj(B["q"])),
        "z": p.tau * abs(p.mu2) * mesh.ds * np.sum(w[:, None] * A["z"] * np.conj(B["z"])),
    }


def inner_product(a, b, mesh: Mesh | None = None, p=None) -> complex:
    """Quadrature form of the energy inner product, conjugate-linear in ``b``."""
    return complex(sum(energy_terms(a, b, mesh, p).values()))


def energy(phi, gen=None) -> float:
    """E = 0.5 * ||Phi||_h^2, through W when a generator is given, else by quadrature."""
    if gen is None:
        return 0.5 * float(np.real(inner_product(phi, phi)))
    x = np.asarray(phi)
    return 0.5 * float(np.real(np.vdot(x, gen.W @ x)))


def graph_norm(gen, phi) -> float:
    """(||Phi||_h^2 + ||A Phi||_h^2)^(1/2)."""
    x = np.asarray(phi)
    if x.shape != (gen.dim,):
        raise ValueError(f"state has shape {x.shape}, expected ({gen.dim},)")
    return float(np.hypot(gen.norm(x), gen.norm(gen.A @ x)))


@dataclass
class EnergySeries:
    """Samples (t, E, D) with D = (mu1 - |mu2|) ||q||_h^2."""

    t: np.ndarray
    E: np.ndarray
    D: np.ndarray
    summary: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.E = np.asarray(self.E, dtype=float)
        self.D = np.asarray(self.D, dtype=float)
        if not (self.t.shape == self.E.shape == self.D.shape):
            raise ValueError("t, E, D must have equal length")
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("t must be strictly increasing")

    def __len__(self) -> int:
        return self.t.size


def write_energy_csv(series: EnergySeries, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "E", "D"])
        for row in zip(series.t, series.E, series.D):
            w.writerow([repr(float(v)) for v in row])
    return path


def read_energy_csv(path) -> EnergySeries:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["t", "E", "D"]:
            raise ValueError(f"{path}: expected header t,E,D, got {reader.fieldnames}")
        rows = [(float(r["t"]), float(r["E"]), float(r["D"])) for r in reader]
    if not rows:
        return EnergySeries([], [], [])
    t, E, D = map(np.array, zip(*rows))
    return EnergySeries(t, E, D)
