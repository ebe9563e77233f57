"""Resolvent of the discrete generator along the imaginary axis.

Singular values are measured in the energy geometry: the adjoint of an operator
``B`` is ``W^{-1} B^H W``, so ``||B||`` is the operator norm induced by
``||x||_h = sqrt(x^H W x)``.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .energy import EnergySeries, StateVector, energy_terms
from .generator import GeneratorMatrix, assemble_shifted
from .mesh import Mesh
from .params import PhysicalParams


class SpectrumHit(ArithmeticError):
    """The shift is numerically an eigenvalue of A_h."""

    def __init__(self, lam, sigma_min=0.0):
        super().__init__(f"lambda={lam} numerically in spectrum (sigma_min ~ {sigma_min:.3e})")
        self.lam = lam
        self.sigma_min = sigma_min


def _shifted_lu(gen: GeneratorMatrix, lam: float, cache: bool):
    def build():
        return assemble_shifted(gen, lam)
    try:
        if cache:
            return gen.factor(("shift", float(lam)), build)
        return spla.splu(build())
    except RuntimeError as exc:  # SuperLU: "Factor is exactly singular"
        raise SpectrumHit(lam) from exc


def solve_shifted(gen: GeneratorMatrix, lam: float, F, cache: bool = True):
    """Solve (i lam - A_h) Phi = F with one step of iterative refinement if needed."""
    f = np.asarray(F).astype(complex)
    lu = _shifted_lu(gen, lam, cache)
    mat = assemble_shifted(gen, lam)
    x = lu.solve(f)
    fn = gen.norm(f)
    r = f - mat @ x
    if gen.norm(r) > 1e-12 * fn:
        x = x + lu.solve(r)
        r = f - mat @ x
    if not np.all(np.isfinite(x)) or gen.norm(r) > 1e-10 * max(fn, np.finfo(float).tiny):
        if fn > 0:
            raise SpectrumHit(lam, fn / max(gen.norm(x), np.finfo(float).tiny))
    return StateVector(x, F.mesh) if isinstance(F, StateVector) else x


def smooth_forcing(m: Mesh, seed: int = 0, modes: int = 4, complex_valued: bool = False) -> StateVector:
    """A smooth random state: each block is a short random trigonometric series
    sampled on the mesh, so the same seed gives the same continuum data at every N."""
    rng = np.random.default_rng(seed)
    k = np.arange(1, modes + 1)
    p = m.params

    def coeffs(n):
        c = rng.standard_normal(n) / np.arange(1, n + 1) ** 2
        if complex_valued:
            c = c + 1j * rng.standard_normal(n) / np.arange(1, n + 1) ** 2
        return c

    def sines(x, length):
        return np.sin(np.pi * np.outer(x, k) / length) @ coeffs(modes)

    def cosines(x, length):
        return np.cos(np.pi * np.outer(x, np.arange(modes + 1)) / length) @ coeffs(modes + 1)

    F = StateVector.zeros(m, dtype=complex if complex_valued else float)
    x = m.x_interior
    for name in ("phi", "u", "psi", "v"):
        F.block(name)[:] = sines(x, p.ell)
    F.theta[:] = cosines(m.x_theta, p.ell0)
    F.q[:] = cosines(m.x_q, p.ell0)
    F.z[:] = np.outer(cosines(m.x_q, p.ell0), cosines(m.s, 1.0))
    return F


def _elastic_fem(p: PhysicalParams, m: Mesh, load_phi: np.ndarray, load_psi: np.ndarray):
    """Linear finite elements with exact (two-point Gauss) integration of
    k1 (phi' + psi)(phi1' + phi2) + k2 psi' phi2' on (0, ell), Dirichlet at both ends."""
    N, dx, n = m.N, m.dx, m.N - 1
    gp = np.array([-1.0, 1.0]) / np.sqrt(3.0)
    K = np.zeros((4, 4))
    for xi in gp:
        shear = np.array([-1.0 / dx, 1.0 / dx, 0.5 * (1 - xi), 0.5 * (1 + xi)])
        K += 0.5 * dx * p.k1 * np.outer(shear, shear)
    bend = np.array([0.0, 0.0, -1.0 / dx, 1.0 / dx])
    K += dx * p.k2 * np.outer(bend, bend)

    rows, cols, vals = [], [], []
    for e in range(N):
        nodes = (e, e + 1)
        dofs = []
        for field_off in (0, n):
            for node in nodes:
                dofs.append(field_off + node - 1 if 1 <= node <= n else -1)
        for a in range(4):
            if dofs[a] < 0:
                continue
            for b in range(4):
                if dofs[b] < 0:
                    continue
                rows.append(dofs[a]); cols.append(dofs[b]); vals.append(K[a, b])
    stiff = sp.csc_matrix((vals, (rows, cols)), shape=(2 * n, 2 * n))
    sol = spla.spsolve(stiff, np.concatenate([load_phi, load_psi]))
    return sol[:n], sol[n:]


def static_solve_oracle(p: PhysicalParams, m: Mesh, F) -> StateVector:
    """Solve -A Phi = F blockwise through the closed forms of the static problem.

    q, z and theta come from explicit quadratures of the data; (phi, psi) solve
    the reduced elastic variational problem with the thermal load, discretised
    by linear finite elements.
    """
    F = F if isinstance(F, StateVector) else StateVector(np.asarray(F), m)
    dx, ds, w = m.dx, m.ds, m.q_weights
    out = StateVector.zeros(m, dtype=np.result_type(F.data.dtype, float))

    f3_damped = F.psi[: m.N0]
    # q = delta f3 + rho3 int_0^x f5  (f5 on cell midpoints: exact cumulative midpoint sum)
    q = p.delta * f3_damped + p.rho3 * dx * np.cumsum(F.theta)
    # z = q + tau int_0^s f7 (levels s_1..s_M)
    z = q[:, None] + p.tau * ds * np.cumsum(F.z, axis=1)
    f7_mean = ds * np.sum(F.z, axis=1)
    # theta(x) = int_x^ell0 g,  g = (mu1 + mu2) q + mu2 tau int_0^1 f7 - gamma f6
    g = (p.mu1 + p.mu2) * q + p.mu2 * p.tau * f7_mean - p.gamma * F.q
    tail = np.cumsum((w * g)[::-1])[::-1]     # int_{x_i - dx/2}^{ell0}, right-endpoint cells
    theta = tail

    load_phi = p.rho1 * dx * F.u
    load_psi = p.rho2 * dx * F.v
    load_psi = load_psi.astype(np.result_type(load_psi, g))
    load_psi[: m.N0] += p.delta * w * g
    phi, psi = _elastic_fem(p, m, load_phi, load_psi)

    out.phi[:] = phi
    out.u[:] = -F.phi
    out.psi[:] = psi
    out.v[:] = -F.psi
    out.theta[:] = theta
    out.q[:] = q
    out.z[:] = z
    return out


@dataclass(frozen=True)
class ResolventSample:
    lam: float
    sigma_min: float
    res_norm: float
    ratio: float
    converged: bool = True
    iterations: int = 0


@dataclass
class SweepReport:
    samples: list[ResolventSample]
    fitted_slope: float
    sup_ratio: float
    flagged: list[float] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"fitted_slope": self.fitted_slope, "sup_ratio": self.sup_ratio,
                "flagged": list(self.flagged)}


def _power(gen: GeneratorMatrix, lam: float, tol: float, maxiter: int, cache: bool = False):
    """Power iteration on R^* R, R = (i lam - A)^{-1}, R^* the W-adjoint."""
    lu = _shifted_lu(gen, lam, cache)
    W = gen.W
    rng = np.random.default_rng(12345)
    x = rng.standard_normal(gen.dim) + 1j * rng.standard_normal(gen.dim)
    x /= gen.norm(x)
    rho = 0.0
    converged = False
    it = 0
    for it in range(1, maxiter + 1):
        y = lu.solve(x)
        rho = gen.norm(y) ** 2
        mx = gen.solve_W(lu.solve(W @ y, trans="H"))
        resid = gen.norm(mx - rho * x)
        nx = gen.norm(mx)
        if not np.isfinite(nx) or nx == 0:
            break
        x = mx / nx
        if resid <= tol * rho:
            converged = True
            break
    y = lu.solve(x)
    rho = gen.norm(y) ** 2
    return rho, x, y, converged, it


def resolvent_norm(gen: GeneratorMatrix, lam: float, tol: float = 1e-6, maxiter: int = 500,
                   return_vectors: bool = False):
    """sigma_min of (i lam - A_h) in the energy geometry, via inverse power iteration."""
    try:
        rho, x, y, conv, it = _power(gen, lam, tol, maxiter)
    except SpectrumHit:
        sample = ResolventSample(float(lam), 0.0, float("inf"), float("inf"), False, 0)
        return (sample, None, None) if return_vectors else sample
    res = float(np.sqrt(rho))
    ratio = res / lam**2 if abs(lam) >= 1 else float("nan")
    sample = ResolventSample(float(lam), 1.0 / res, res, ratio, conv, it)
    return (sample, x, y) if return_vectors else sample


def loglog_slope(x, y) -> float:
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    return float(np.polyfit(lx, ly, 1)[0])


def resolvent_sweep(gen: GeneratorMatrix, lambdas, workers: int = 1, **kw) -> SweepReport:
    """Resolvent norms at each lambda, the log-log slope over the top decade and
    the largest res_norm / lambda^2."""
    lams = [float(l) for l in lambdas]
    if any(l <= 0 for l in lams):
        raise ValueError("lambdas must be positive")
    if lams != sorted(lams):
        raise ValueError("lambdas must be sorted")
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            samples = list(pool.map(lambda l: resolvent_norm(gen, l, **kw), lams))
    else:
        samples = [resolvent_norm(gen, l, **kw) for l in lams]
    good = [s for s in samples if s.converged]
    flagged = [s.lam for s in samples if not s.converged]
    slope = float("nan")
    if good:
        top = max(s.lam for s in good)
        decade = [s for s in good if s.lam >= top / 10.0]
        if len(decade) >= 2:
            slope = loglog_slope([s.lam for s in decade], [s.res_norm for s in decade])
    ratios = [s.ratio for s in good if s.lam >= 1]
    sup_ratio = float(max(ratios)) if ratios else float("nan")
    return SweepReport(samples, slope, sup_ratio, flagged)


def worst_mode_report(gen: GeneratorMatrix, lam: float, **kw) -> dict:
    """Block norms of the most amplified resolvent output at lam, scaled to ||Phi||_h = 1."""
    sample, _, y = resolvent_norm(gen, lam, return_vectors=True, **kw)
    if y is None or not sample.converged:
        raise ArithmeticError(f"resolvent iteration did not converge at lambda={lam}")
    m, p = gen.mesh, gen.params
    phi = StateVector(y / gen.norm(y), m)
    dx, w = m.dx, m.q_weights

    def l2(f, weight=dx):
        return float(np.sqrt(np.sum(weight * np.abs(f) ** 2)))

    pad = lambda f: np.concatenate([[0.0], f, [0.0]])
    th = np.concatenate([phi.theta, [0.0]])
    theta_x = (th[1:] - th[:-1]) / w
    terms = energy_terms(phi, phi, m, p)
    return {
        "lambda": float(lam),
        "res_norm": sample.res_norm,
        "norm_h": gen.norm(phi.data),
        "q": l2(phi.q, w),
        "z": l2(phi.z, w[:, None] * m.ds),
        "z1": l2(phi.z[:, -1], w),
        "theta": l2(phi.theta),
        "theta_x": l2(theta_x, w),
        "lam_psi": abs(lam) * l2(phi.psi),
        "psi_x": l2(np.diff(pad(phi.psi)) / dx),
        "lam_phi": abs(lam) * l2(phi.phi),
        "phi_x": l2(np.diff(pad(phi.phi)) / dx),
        "energy_terms": {k: float(np.real(v)) for k, v in terms.items()},
    }


def decay_fit(series: EnergySeries, window: tuple[float, float] = (0.5, 1.0),
              floor: float = 1e-250) -> dict:
    """Least-squares fit E ~ C t^(-alpha) on the tail window [a T, b T].

    Points after E first falls below ``floor * max(E)`` are discarded. The fit is
    repeated on the two halves of the window (in log t); a late exponent more than
    5% above the early one flags super-polynomial decay.
    """
    t, E = np.asarray(series.t), np.asarray(series.E)
    if t.size < 3:
        raise ValueError("series too short")
    T = t[-1]
    emax = np.max(E) if E.size else 0.0
    if emax <= 0:
        raise ValueError("energy is identically zero")
    low = np.nonzero(E <= floor * emax)[0]
    stop = low[0] if low.size else t.size
    sel = np.arange(t.size) < stop
    sel &= (t >= window[0] * T) & (t <= window[1] * T) & (t > 0) & (E > 0)
    if np.count_nonzero(sel) < 3:
        raise ValueError("series too short (fewer than 3 usable tail points)")
    lt, lE = np.log(t[sel]), np.log(E[sel])
    slope, icept = np.polyfit(lt, lE, 1)
    mid = 0.5 * (lt[0] + lt[-1])
    early, late = lt <= mid, lt >= mid
    a_early = -np.polyfit(lt[early], lE[early], 1)[0] if early.sum() >= 2 else float("nan")
    a_late = -np.polyfit(lt[late], lE[late], 1)[0] if late.sum() >= 2 else float("nan")
    superpoly = bool(np.isfinite(a_early) and np.isfinite(a_late)
                     and a_late > 1.05 * a_early + 1e-9 and a_late > 0)
    return {
        "alpha": float(-slope),
        "C": float(np.exp(icept)),
        "sup_tE": float(np.max(t[sel] * E[sel])),
        "alpha_early": float(a_early),
        "alpha_late": float(a_late),
        "super_polynomial": superpoly,
        "n_points": int(np.count_nonzero(sel)),
    }


def write_resolvent_csv(report: SweepReport, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lambda", "sigma_min", "res_norm", "ratio"])
        for s in report.samples:
            w.writerow([repr(s.lam), repr(s.sigma_min), repr(s.res_norm), repr(s.ratio)])
    return path


def write_sweep_json(report: SweepReport, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(report.to_json(), indent=2))
    return path
