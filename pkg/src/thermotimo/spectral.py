"""Eigenvalues of A_h near the imaginary axis by shift-invert iteration."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .energy import StateVector
from .generator import GeneratorMatrix
from .mesh import Mesh
from .params import PhysicalParams


class EigenIterationError(ArithmeticError):
    pass


@dataclass(frozen=True)
class EigenPair:
    value: complex
    vector: np.ndarray = field(repr=False)
    residual: float
    converged: bool
    iterations: int


def _residual(gen: GeneratorMatrix, x: np.ndarray):
    ax = gen.A @ x
    nx2 = np.real(np.vdot(x, gen.W @ x))
    mu = np.vdot(x, gen.W @ ax) / nx2
    return complex(mu), gen.norm(ax - mu * x) / np.sqrt(nx2)


def nearest_eigenvalue(gen: GeneratorMatrix, shift: complex, tol: float = 1e-8,
                       maxiter: int = 2000, v0=None, refine: bool = True) -> EigenPair:
    """Eigenpair of A_h nearest to ``shift`` by shift-invert power iteration.

    Once the W-Rayleigh residual drops below 1e-4 (relative to max(1, |mu|)) the
    shift is moved to the current estimate (at most three refactorisations),
    which turns the linear convergence into Rayleigh-quotient convergence.
    Residuals are ||A v - mu v||_h / ||v||_h.
    """
    ident = sp.identity(gen.dim, dtype=complex, format="csc")
    A = gen.A.astype(complex).tocsc()

    def factor(sigma):
        try:
            return spla.splu((sigma * ident - A).tocsc())
        except RuntimeError as exc:
            raise EigenIterationError(f"shift {sigma} is numerically singular") from exc

    sigma = complex(shift)
    lu = factor(sigma)
    if v0 is None:
        rng = np.random.default_rng(2024)
        x = rng.standard_normal(gen.dim) + 1j * rng.standard_normal(gen.dim)
    else:
        x = np.asarray(v0, dtype=complex).copy()
    x /= gen.norm(x)
    refactors = 0
    mu, res = _residual(gen, x)
    it = 0
    for it in range(1, maxiter + 1):
        y = lu.solve(x)
        ny = gen.norm(y)
        if not np.isfinite(ny) or ny == 0:
            break
        x = y / ny
        # fix the phase so successive iterates are comparable
        k = np.argmax(np.abs(x))
        x *= np.abs(x[k]) / x[k]
        mu, res = _residual(gen, x)
        scale = max(1.0, abs(mu))
        if res <= tol * scale * 1e-2 or (res <= tol and refactors >= 3):
            break
        if refine and refactors < 3 and res <= 1e-4 * scale:
            try:
                lu = factor(mu + 1e-14 * scale)
            except EigenIterationError:
                refine = False
            refactors += 1
    return EigenPair(mu, x, float(res), bool(res <= tol), it)


def delay_profile_check(pair, p: PhysicalParams, m: Mesh, norm=None) -> float:
    """Largest deviation over x-nodes of z(x, .) from q(x) exp(-mu tau s), in the
    discrete L2(0, 1) norm, relative to the norm of the eigenvector."""
    mu, vec = (pair.value, pair.vector) if isinstance(pair, EigenPair) else pair
    v = StateVector(np.asarray(vec), m)
    profile = np.exp(-mu * p.tau * m.s)
    dev = v.z - v.q[:, None] * profile[None, :]
    per_node = np.sqrt(m.ds * np.sum(np.abs(dev) ** 2, axis=1))
    scale = norm(v.data) if norm is not None else np.linalg.norm(v.data)
    return float(np.max(per_node) / scale)


@dataclass
class SpectrumResult:
    entries: list[tuple[complex, float, float]]
    targets: list[float]
    converged: list[bool]

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([e[0] for e in self.entries])

    @property
    def min_abs_re(self) -> float:
        vals = [abs(e[0].real) for e, c in zip(self.entries, self.converged) if c]
        return float(min(vals)) if vals else float("nan")

    @property
    def flagged(self) -> list[float]:
        return [t for t, c in zip(self.targets, self.converged) if not c]


def spectral_scan(gen: GeneratorMatrix, lambdas, eps0: float = 1e-8, **kw) -> SpectrumResult:
    """Nearest eigenvalue to each shift i*lambda + eps0."""
    entries, conv = [], []
    for lam in lambdas:
        pair = nearest_eigenvalue(gen, complex(eps0, lam), **kw)
        err = delay_profile_check(pair, gen.params, gen.mesh, norm=gen.norm)
        entries.append((pair.value, pair.residual, err))
        conv.append(pair.converged)
    return SpectrumResult(entries, [float(l) for l in lambdas], conv)


def write_spectrum_csv(result: SpectrumResult, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["re", "im", "residual", "delay_profile_error"])
        for mu, res, err in result.entries:
            w.writerow([repr(float(mu.real)), repr(float(mu.imag)), repr(res), repr(err)])
    return path
