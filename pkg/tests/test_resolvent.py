import json

import numpy as np
import pytest
import scipy.linalg

from thermotimo import (DiscretizationParams, EnergySeries, assemble_generator, build_mesh,
                        decay_fit, init_state, resolvent_norm, resolvent_sweep, simulate,
                        solve_shifted, spectral_scan, static_solve_oracle, worst_mode_report)
from thermotimo.energy import StateVector
from thermotimo.resolvent import (SpectrumHit, loglog_slope, smooth_forcing,
                                  write_resolvent_csv, write_sweep_json)

from conftest import random_state


def dense_sigma_min(gen, lam):
    """Smallest singular value of i lam - A in the W-geometry, W = L L^T."""
    L = np.linalg.cholesky(gen.W.toarray())
    B = 1j * lam * np.eye(gen.dim) - gen.A.toarray()
    return scipy.linalg.svdvals(L.T @ B @ np.linalg.inv(L.T)).min()


def test_zero_forcing(gen16):
    np.testing.assert_array_equal(solve_shifted(gen16, 3.0, np.zeros(gen16.dim)), 0.0)


@pytest.mark.parametrize("lam", [0.0, 1.0, 7.5, 40.0])
def test_solve_residual_and_inverse(gen32, lam):
    rng = np.random.default_rng(0)
    F = random_state(gen32, rng)
    x = solve_shifted(gen32, lam, F)
    r = F - (1j * lam * x - gen32.A @ x)
    assert gen32.norm(r) <= 1e-10 * gen32.norm(F)
    y = random_state(gen32, rng)
    back = solve_shifted(gen32, lam, 1j * lam * y - gen32.A @ y)
    assert gen32.norm(back - y) <= 1e-9 * gen32.norm(y)


def test_spectrum_hit_on_toy(toy):
    # the toy mesh carries an undamped pair at +-4i
    with pytest.raises(SpectrumHit):
        solve_shifted(toy, 4.0, np.ones(toy.dim))
    s = resolvent_norm(toy, 4.0)
    assert not s.converged and s.res_norm == np.inf


def test_oracle_ramp(params):
    m = build_mesh(params.replace(rho3=2.5), 16, 4)
    F = StateVector.zeros(m)
    F.theta[:] = 1.0
    out = static_solve_oracle(params.replace(rho3=2.5), m, F)
    np.testing.assert_allclose(out.q, 2.5 * m.x_q, rtol=1e-14)


def test_oracle_zero(params, gen16):
    out = static_solve_oracle(params, gen16.mesh, StateVector.zeros(gen16.mesh))
    np.testing.assert_array_equal(out.data, 0.0)


def test_oracle_thermal_blocks_exact(params, gen32):
    # q, z, theta closed forms coincide with the discrete solve; only (phi, psi) carry O(dx^2)
    m = gen32.mesh
    F = smooth_forcing(m, seed=1)
    a = StateVector(solve_shifted(gen32, 0.0, F.data), m)
    b = static_solve_oracle(params, m, F)
    for name in ("u", "v", "theta", "q", "z"):
        np.testing.assert_allclose(a.block(name), b.block(name), rtol=1e-11, atol=1e-12)
    assert np.max(np.abs(a.phi - b.phi)) > 1e-8


def test_oracle_convergence(params):
    errs = []
    for N in (32, 64, 128):
        m = build_mesh(params, N, 8)
        gen = assemble_generator(params, m)
        F = smooth_forcing(m, seed=2, complex_valued=True)
        errs.append(gen.norm(solve_shifted(gen, 0.0, F).data - static_solve_oracle(params, m, F).data))
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(orders >= 1.0), orders


def test_resolvent_at_zero_is_finite(gen32):
    s = resolvent_norm(gen32, 0.0)
    assert s.converged and np.isfinite(s.res_norm)
    assert s.res_norm * s.sigma_min == pytest.approx(1.0, rel=1e-15)
    assert np.isnan(s.ratio)


@pytest.mark.parametrize("lam", [0.0, 0.5, 1.0, 2.0, 3.3, 10.0])
def test_sigma_min_matches_dense_svd(toy, lam):
    s = resolvent_norm(toy, lam, tol=1e-12, maxiter=5000)
    assert s.converged
    assert abs(s.sigma_min - dense_sigma_min(toy, lam)) <= 1e-8 * dense_sigma_min(toy, lam)


def test_sigma_min_dense_at_larger_size(gen16):
    for lam in (1.5, 6.0):
        s = resolvent_norm(gen16, lam, tol=1e-10, maxiter=5000)
        assert s.sigma_min == pytest.approx(dense_sigma_min(gen16, lam), rel=1e-7)


def test_resolvent_continuity(gen32):
    lam = 5.3
    base = resolvent_norm(gen32, lam, tol=1e-10).res_norm
    gaps = [abs(resolvent_norm(gen32, lam + h, tol=1e-10).res_norm - base) for h in (1e-1, 1e-2, 1e-3)]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 1e-2 * base


def test_sweep_contract(gen32):
    lams = np.geomspace(1, 9.6, 12)
    report = resolvent_sweep(gen32, lams)
    assert [s.lam for s in report.samples] == list(lams)
    assert all(s.sigma_min > 0 for s in report.samples)
    assert report.flagged == []
    assert report.sup_ratio == max(s.res_norm / s.lam**2 for s in report.samples)
    with pytest.raises(ValueError):
        resolvent_sweep(gen32, lams[::-1])
    with pytest.raises(ValueError):
        resolvent_sweep(gen32, [0.0, 1.0])


def test_parallel_sweep_identical(gen32):
    lams = np.geomspace(2, 9.6, 6)
    a = resolvent_sweep(gen32, lams, workers=1)
    b = resolvent_sweep(gen32, lams, workers=3)
    assert a.samples == b.samples


def test_power_law_fit():
    x = np.geomspace(3, 300, 25)
    s = 1.7
    y = 0.4 * x**s
    assert loglog_slope(x, y) == pytest.approx(s, abs=1e-12)
    # doubling every lambda multiplies the fitted law by 2^s
    assert (0.4 * (2 * x) ** s / y) == pytest.approx(2**s)


def test_slope_robust_to_single_sample(params):
    m = build_mesh(params, 128, 8)
    gen = assemble_generator(params, m)
    lams = np.geomspace(3.84, 38.4, 200)
    report = resolvent_sweep(gen, lams)
    L = np.array([s.lam for s in report.samples])
    R = np.array([s.res_norm for s in report.samples])
    base = loglog_slope(L, R)
    assert base == pytest.approx(report.fitted_slope)
    change = max(abs(loglog_slope(np.delete(L, i), np.delete(R, i)) - base) for i in range(L.size))
    assert change < 0.05


def test_worst_mode_normalisation(gen32):
    rep = worst_mode_report(gen32, 6.0)
    assert rep["norm_h"] == pytest.approx(1.0, rel=1e-14)
    assert sum(rep["energy_terms"].values()) == pytest.approx(1.0, rel=1e-12)
    for key in ("q", "z", "z1", "theta", "theta_x", "lam_psi", "psi_x", "lam_phi", "phi_x"):
        assert rep[key] >= 0


def test_worst_mode_q_small_near_resonance(params):
    """At the least damped eigenfrequency of each band the maximising output
    carries less and less heat flux as the frequency grows."""
    m = build_mesh(params, 128, 8)
    gen = assemble_generator(params, m)
    scan = spectral_scan(gen, np.linspace(3.84, 38.4, 40))
    ev = np.unique(np.round(scan.eigenvalues, 9))
    ev = ev[ev.imag > 0]
    edges = np.geomspace(3.84, 38.4, 7)
    lams, qs = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        band = ev[(ev.imag >= a) & (ev.imag < b)]
        if band.size:
            lam = band[np.argmax(band.real)].imag
            lams.append(lam)
            qs.append(worst_mode_report(gen, lam)["q"])
    assert len(lams) >= 5
    assert loglog_slope(lams, qs) < 0


def test_decay_fit_power_law():
    t = np.linspace(0.05, 100, 2000)
    E = 1.0 / t
    fit = decay_fit(EnergySeries(t, E, np.zeros_like(t)))
    assert fit["alpha"] == pytest.approx(1.0, abs=1e-6)
    assert fit["C"] == pytest.approx(1.0, rel=1e-6)
    assert fit["sup_tE"] == pytest.approx(1.0, rel=1e-9)
    assert not fit["super_polynomial"]


def test_decay_fit_exponential_flagged():
    t = np.linspace(0, 50, 1001)
    E = np.exp(-t)
    fit = decay_fit(EnergySeries(t, E, np.zeros_like(t)))
    assert fit["super_polynomial"]
    assert fit["alpha_late"] > fit["alpha_early"]
    wider = decay_fit(EnergySeries(t, E, np.zeros_like(t)), window=(0.25, 1.0))
    assert fit["alpha"] > wider["alpha"]


def test_decay_fit_stops_before_underflow():
    t = np.linspace(0, 100, 1001)
    E = np.where(t < 60, 1.0 / (1 + t), 0.0)
    fit = decay_fit(EnergySeries(t, E, np.zeros_like(t)), window=(0.3, 1.0))
    assert fit["n_points"] == np.count_nonzero((t >= 30) & (t < 60))
    assert fit["alpha"] == pytest.approx(1.0, abs=0.05)


def test_decay_fit_errors():
    with pytest.raises(ValueError, match="too short"):
        decay_fit(EnergySeries([0.0, 1.0], [1.0, 0.5], [0.0, 0.0]))
    t = np.arange(10.0)
    with pytest.raises(ValueError):
        decay_fit(EnergySeries(t, np.zeros(10), np.zeros(10)))


def test_writers(gen32, tmp_path):
    report = resolvent_sweep(gen32, [2.0, 4.0, 8.0])
    lines = write_resolvent_csv(report, tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "lambda,sigma_min,res_norm,ratio"
    assert len(lines) == 4
    data = json.loads(write_sweep_json(report, tmp_path / "s.json").read_text())
    assert set(data) == {"fitted_slope", "sup_ratio", "flagged"}


def test_decay_fit_on_simulation(params):
    m = build_mesh(params, 64, 8)
    gen = assemble_generator(params, m)
    series = simulate(gen, init_state("sine-mode(1)", params, m).data,
                      DiscretizationParams(dt=0.02, T=150.0))
    assert decay_fit(series)["alpha"] >= 0.9
