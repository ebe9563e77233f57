"""Uniform grids on (0, ell), the damped region (0, ell0), the delay interval (0, 1),
and the global unknown layout of the seven state blocks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .params import DiscretizationParams, PhysicalParams, damped_cells

BLOCKS = ("phi", "u", "psi", "v", "theta", "q", "z")


@dataclass(frozen=True)
class DofLayout:
    """Contiguous index ranges of the blocks phi, u, psi, v, theta, q, z.

    phi, u, psi, v hold the N-1 interior nodes of (0, ell); theta holds the N0
    cell midpoints of the damped region; q holds nodes 1..N0; z holds levels
    k = 1..M at each q-node, x-major.
    """

    N: int
    N0: int
    M: int

    @property
    def sizes(self) -> dict[str, int]:
        n = self.N - 1
        return {"phi": n, "u": n, "psi": n, "v": n,
                "theta": self.N0, "q": self.N0, "z": self.N0 * self.M}

    @property
    def offsets(self) -> dict[str, int]:
        out, pos = {}, 0
        for name, size in self.sizes.items():
            out[name] = pos
            pos += size
        return out

    @property
    def dim(self) -> int:
        return 4 * (self.N - 1) + 2 * self.N0 + self.N0 * self.M

    def slice(self, block: str) -> slice:
        start = self.offsets[block]
        return slice(start, start + self.sizes[block])

    def to_global(self, block: str, local: int) -> int:
        if not 0 <= local < self.sizes[block]:
            raise IndexError(f"local index {local} out of range for block {block}")
        return self.offsets[block] + local

    def to_local(self, index: int) -> tuple[str, int]:
        if not 0 <= index < self.dim:
            raise IndexError(f"global index {index} out of range")
        for name in reversed(BLOCKS):
            off = self.offsets[name]
            if index >= off and self.sizes[name] > 0:
                return name, index - off
        raise AssertionError("unreachable")

    def z_index(self, i: int, k: int) -> int:
        """Global index of z at q-node i (1..N0) and delay level k (1..M)."""
        if not (1 <= i <= self.N0 and 1 <= k <= self.M):
            raise IndexError((i, k))
        return self.offsets["z"] + (i - 1) * self.M + (k - 1)


@dataclass(frozen=True)
class Mesh:
    N: int
    N0: int
    M: int
    ell: float
    ell0: float
    params: PhysicalParams | None = field(default=None, repr=False, compare=False)

    @property
    def dx(self) -> float:
        return self.ell / self.N

    @property
    def ds(self) -> float:
        return 1.0 / self.M

    @property
    def x(self) -> np.ndarray:
        """All nodes x_0..x_N."""
        return np.arange(self.N + 1) * self.dx

    @property
    def x_interior(self) -> np.ndarray:
        return self.x[1:-1]

    @property
    def x_theta(self) -> np.ndarray:
        """Cell midpoints of the damped region, where theta lives."""
        return (np.arange(self.N0) + 0.5) * self.dx

    @property
    def x_q(self) -> np.ndarray:
        """Nodes 1..N0 of the damped region, where q and z live."""
        return np.arange(1, self.N0 + 1) * self.dx

    @property
    def s(self) -> np.ndarray:
        """Stored delay levels s_1..s_M."""
        return np.arange(1, self.M + 1) * self.ds

    @property
    def q_weights(self) -> np.ndarray:
        """Trapezoid weights of nodes 1..N0 on (0, ell0); q(0) = 0 drops node 0."""
        w = np.full(self.N0, self.dx)
        w[-1] = 0.5 * self.dx
        return w

    @property
    def layout(self) -> DofLayout:
        return DofLayout(self.N, self.N0, self.M)

    @property
    def dim(self) -> int:
        return self.layout.dim


def build_mesh(p: PhysicalParams, d: DiscretizationParams | int, M: int | None = None) -> Mesh:
    """Build the mesh; ``d`` may be a DiscretizationParams or the cell count N (then pass M)."""
    if isinstance(d, DiscretizationParams):
        N, M = d.N, d.M
    else:
        N = int(d)
        if M is None:
            raise TypeError("M is required when N is given directly")
    n0 = damped_cells(p.ell, p.ell0, N)
    if n0 is None or not 1 <= n0 <= N - 1:
        raise ValueError(f"ell0={p.ell0} is not an interior grid node for N={N}")
    if N < 2 or M < 1:
        raise ValueError("need N >= 2 and M >= 1")
    return Mesh(N=N, N0=n0, M=int(M), ell=p.ell, ell0=p.ell0, params=p)
