"""Discrete generator of the delayed thermoelastic Timoshenko system.

Every first derivative is assembled together with its integration-by-parts
partner as an exact adjoint under the discrete energy inner product, so the
energy identities of the continuous problem hold to rounding error:

* elastic strain ``e = G phi + S psi`` on cells (forward difference G, cell
  average S); the divergence occurrences are ``-G^T`` and ``S^T``;
* theta sits on the cell midpoints of (0, ell0), q on nodes 1..N0;
* the delay variable z is transported by a backward (upwind) difference in s
  with the level s = 0 replaced by q.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.io
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .mesh import Mesh
from .params import PhysicalParams


def _forward_difference(n_cells: int, n_interior: int, dx: float) -> sp.csr_matrix:
    """(G f)_j = (f_{j+1} - f_j)/dx for cells j < n_cells; nodes 0 and beyond
    n_interior carry homogeneous values."""
    rows, cols, vals = [], [], []
    for j in range(n_cells):
        if 1 <= j + 1 <= n_interior:
            rows.append(j); cols.append(j); vals.append(1.0 / dx)
        if 1 <= j <= n_interior:
            rows.append(j); cols.append(j - 1); vals.append(-1.0 / dx)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n_cells, n_interior))


def _cell_average(n_cells: int, n_interior: int) -> sp.csr_matrix:
    G = _forward_difference(n_cells, n_interior, 1.0)
    return abs(G) * 0.5


@dataclass(frozen=True)
class GeneratorMatrix:
    """Assembled generator ``A`` and energy weight ``W`` (``<a, b>_h = a^T W conj(b)``)."""

    A: sp.csr_matrix
    W: sp.csr_matrix
    mesh: Mesh
    params: PhysicalParams
    conservative: sp.csr_matrix = field(repr=False)
    _factors: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    @cached_property
    def W_lu(self) -> spla.SuperLU:
        return spla.splu(self.W.tocsc())

    def solve_W(self, b: np.ndarray) -> np.ndarray:
        if np.iscomplexobj(b):
            return self.W_lu.solve(np.ascontiguousarray(b.real)) + 1j * self.W_lu.solve(
                np.ascontiguousarray(b.imag))
        return self.W_lu.solve(b)

    def norm(self, x: np.ndarray) -> float:
        x = np.asarray(x)
        return float(np.sqrt(max(np.real(np.vdot(x, self.W @ x)), 0.0)))

    def dot(self, a: np.ndarray, b: np.ndarray) -> complex:
        return complex(np.vdot(np.asarray(b), self.W @ np.asarray(a)))

    def factor(self, key, build):
        """LU of a matrix derived from A, cached under ``key``."""
        lu = self._factors.get(key)
        if lu is None:
            lu = spla.splu(build().tocsc())
            self._factors[key] = lu
        return lu


def _elastic_operators(m: Mesh):
    n = m.N - 1
    G = _forward_difference(m.N, n, m.dx)
    S = _cell_average(m.N, n)
    return G, S


def assemble_weight(p: PhysicalParams, m: Mesh) -> sp.csr_matrix:
    """Energy weight matrix mirroring the seven terms of the Hilbert inner product."""
    G, S = _elastic_operators(m)
    dx = m.dx
    n = m.N - 1
    I = sp.identity(n, format="csr")
    wq = m.q_weights
    w_phiphi = p.k1 * dx * (G.T @ G)
    w_phipsi = p.k1 * dx * (G.T @ S)
    w_psipsi = p.k1 * dx * (S.T @ S) + p.k2 * dx * (G.T @ G)
    blocks = [
        [w_phiphi, None, w_phipsi, None],
        [None, p.rho1 * dx * I, None, None],
        [w_phipsi.T, None, w_psipsi, None],
        [None, None, None, p.rho2 * dx * I],
    ]
    elastic = sp.bmat(blocks, format="csr")
    thermal = sp.diags(np.concatenate([
        np.full(m.N0, p.rho3 * dx),
        p.gamma * wq,
        p.tau * abs(p.mu2) * np.repeat(wq, m.M) * m.ds,
    ]))
    return sp.block_diag([elastic, thermal], format="csr")


def _assemble_blocks(p: PhysicalParams, m: Mesh):
    n, N0, M = m.N - 1, m.N0, m.M
    dx, ds = m.dx, m.ds
    lay = m.layout
    G, S = _elastic_operators(m)
    I = sp.identity(n, format="csr")
    wq = m.q_weights

    # damped-region differences: G_d on v (first N0 cells), G_q on q (q_0 = 0)
    Gd = G[:N0, :]
    Gq = _forward_difference(N0, N0, dx)
    # theta -> q-node gradient, exact adjoint of -G_q; node N0 sees theta(ell0) = 0
    Gtheta = -sp.diags(dx / wq) @ Gq.T
    # d_h(theta): nonzero on nodes 1..N0 only
    Dtheta = -p.delta * Gd.T

    strain_phi, strain_psi = G, S
    skew = {
        ("phi", "u"): I,
        ("u", "phi"): -(p.k1 / p.rho1) * (G.T @ strain_phi),
        ("u", "psi"): -(p.k1 / p.rho1) * (G.T @ strain_psi),
        ("psi", "v"): I,
        ("v", "phi"): -(p.k1 / p.rho2) * (S.T @ strain_phi),
        ("v", "psi"): (-(p.k2 / p.rho2) * (G.T @ G) - (p.k1 / p.rho2) * (S.T @ strain_psi)),
        ("v", "theta"): -(1.0 / p.rho2) * Dtheta,
        ("theta", "q"): -(1.0 / p.rho3) * Gq,
        ("theta", "v"): -(p.delta / p.rho3) * Gd,
        ("q", "theta"): -(1.0 / p.gamma) * Gtheta,
    }

    # z_k' = -(z_k - z_{k-1})/(tau ds), z_0 = q
    zz = sp.kron(sp.identity(N0), sp.diags([np.ones(M), -np.ones(M - 1)], [0, -1]))
    zq = sp.kron(sp.identity(N0), sp.csr_matrix(([1.0], ([0], [0])), shape=(M, 1)))
    # picks z(., 1), the last level at each node
    z_last = sp.kron(sp.identity(N0), sp.csr_matrix(([1.0], ([0], [M - 1])), shape=(1, M)))
    damp = {
        ("q", "q"): -(p.mu1 / p.gamma) * sp.identity(N0),
        ("q", "z"): -(p.mu2 / p.gamma) * z_last,
        ("z", "z"): -(1.0 / (p.tau * ds)) * zz,
        ("z", "q"): (1.0 / (p.tau * ds)) * zq,
    }
    return lay, skew, damp


def _place(lay, parts) -> sp.csr_matrix:
    names = ("phi", "u", "psi", "v", "theta", "q", "z")
    grid = [[None] * 7 for _ in range(7)]
    for (r, c), blk in parts.items():
        grid[names.index(r)][names.index(c)] = sp.csr_matrix(blk)
    sizes = lay.sizes
    for i, name in enumerate(names):
        if grid[i][i] is None:
            grid[i][i] = sp.csr_matrix((sizes[name], sizes[name]))
    out = sp.bmat(grid, format="csr")
    out.eliminate_zeros()
    return out


def assemble_generator(p: PhysicalParams, m: Mesh) -> GeneratorMatrix:
    """Assemble A_h and W for the given parameters and mesh."""
    lay, skew, damp = _assemble_blocks(p, m)
    S = _place(lay, skew)
    A = _place(lay, {**skew, **damp})
    W = assemble_weight(p, m)
    return GeneratorMatrix(A=A, W=W, mesh=m, params=p, conservative=S)


def assemble_shifted(gen: GeneratorMatrix, lam: float) -> sp.csc_matrix:
    """Return ``i*lam*I - A`` as a complex sparse matrix."""
    shift = sp.identity(gen.dim, dtype=complex, format="csc") * (1j * lam)
    return (shift - gen.A.astype(complex)).tocsc()


def dissipation_blocks(gen: GeneratorMatrix, phi) -> dict[str, float]:
    """Evaluate the terms of the dissipation identity from the q and z blocks alone."""
    x = np.asarray(phi)
    m, p = gen.mesh, gen.params
    lay = m.layout
    q = x[lay.slice("q")]
    z = x[lay.slice("z")].reshape(m.N0, m.M)
    w = m.q_weights
    a2 = abs(p.mu2)
    z_full = np.concatenate([q[:, None], z], axis=1)
    jumps = np.sum(np.abs(np.diff(z_full, axis=1)) ** 2, axis=1)
    return {
        "q_damping": float(-p.mu1 * np.sum(w * np.abs(q) ** 2)),
        "delayed_feedback": float(-np.real(p.mu2 * np.sum(w * z[:, -1] * np.conj(q)))),
        "delay_outflow": float(-0.5 * a2 * np.sum(w * np.abs(z[:, -1]) ** 2)),
        "delay_inflow": float(0.5 * a2 * np.sum(w * np.abs(q) ** 2)),
        "upwind": float(-0.5 * a2 * np.sum(w * jumps)),
    }


def dissipation_identity(gen: GeneratorMatrix, phi) -> dict:
    """Compare Re<A Phi, Phi>_h against its closed-form decomposition.

    Returns ``lhs``, ``rhs_blocks``, ``residual = lhs - sum(rhs_blocks)`` and
    ``young_slack = -(mu1 - |mu2|) ||q||^2 - lhs``, which is nonnegative up to
    rounding.
    """
    x = np.asarray(phi)
    if x.shape != (gen.dim,):
        raise ValueError(f"state has shape {x.shape}, expected ({gen.dim},)")
    lhs = float(np.real(np.vdot(x, gen.W @ (gen.A @ x))))
    blocks = dissipation_blocks(gen, x)
    q = x[gen.mesh.layout.slice("q")]
    q2 = float(np.sum(gen.mesh.q_weights * np.abs(q) ** 2))
    p = gen.params
    return {
        "lhs": lhs,
        "rhs_blocks": blocks,
        "residual": lhs - sum(blocks.values()),
        "young_slack": -(p.mu1 - abs(p.mu2)) * q2 - lhs,
    }


@dataclass(frozen=True)
class UniqueContinuationMatrix:
    lam: float
    A_lambda: np.ndarray


def unique_continuation_matrix(p: PhysicalParams, lam: float) -> UniqueContinuationMatrix:
    """First-order form of the undamped Timoshenko eigen-ODE for (phi, phi_x, psi, psi_x)."""
    l2 = lam * lam
    a = np.array([
        [0.0, 1.0, 0.0, 0.0],
        [-l2 * p.rho1 / p.k1, 0.0, 0.0, -1.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, p.k1 / p.k2, (p.k1 - l2 * p.rho2) / p.k2, 0.0],
    ])
    return UniqueContinuationMatrix(lam=float(lam), A_lambda=a)


def propagate_unique_continuation(ucm: UniqueContinuationMatrix, x: float, psi0,
                                  ell0: float = 0.0) -> np.ndarray:
    """Return exp(A_lambda (x - ell0)) psi0."""
    if x < ell0:
        raise ValueError("x must satisfy x >= ell0")
    psi0 = np.asarray(psi0)
    return scipy.linalg.expm(ucm.A_lambda * (x - ell0)) @ psi0


def dump_matrix_market(gen: GeneratorMatrix, directory) -> tuple[Path, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    a_path, w_path = directory / "A.mtx", directory / "W.mtx"
    scipy.io.mmwrite(a_path, gen.A, comment="discrete generator A_h")
    scipy.io.mmwrite(w_path, gen.W, comment="energy weight W")
    return a_path, w_path
