import numpy as np
import pytest

from thermotimo import (assemble_generator, build_mesh, delay_profile_check, nearest_eigenvalue,
                        spectral_scan)
from thermotimo.energy import StateVector
from thermotimo.spectral import EigenIterationError, EigenPair, write_spectrum_csv


def low_band(gen, top=10.0):
    scan = spectral_scan(gen, np.linspace(0, top, 11))
    assert all(scan.converged)
    ev = np.unique(np.round(scan.eigenvalues, 8))
    return ev[(ev.imag >= 0) & (ev.imag < top)]


@pytest.mark.parametrize("shift", [0.1j, 2j, 3.5j, -1.0, 6j - 1, -2.5j])
def test_toy_matches_dense(toy, shift):
    dense = np.linalg.eigvals(toy.A.toarray())
    pair = nearest_eigenvalue(toy, shift)
    assert pair.converged and pair.residual <= 1e-8
    target = dense[np.argmin(np.abs(dense - shift))]
    assert abs(pair.value - target) <= 1e-6


def test_toy_undamped_pair_has_no_heat(toy):
    # one interior node decouples phi from the damping; q and z vanish on that mode
    pair = nearest_eigenvalue(toy, 3.9j)
    assert pair.value == pytest.approx(4j, abs=1e-10)
    v = StateVector(pair.vector, toy.mesh)
    assert np.max(np.abs(v.q)) < 1e-8 * np.max(np.abs(v.data))
    assert np.max(np.abs(v.z)) < 1e-8 * np.max(np.abs(v.data))
    assert delay_profile_check(pair, toy.params, toy.mesh, norm=toy.norm) < 1e-8


def test_singular_shift(toy):
    with pytest.raises(EigenIterationError):
        nearest_eigenvalue(toy, 4j)


def test_nonconvergence_is_flagged(gen32):
    pair = nearest_eigenvalue(gen32, 20j, maxiter=2, refine=False)
    assert not pair.converged
    assert pair.iterations == 2


def test_scan_left_half_plane(gen32):
    scan = spectral_scan(gen32, np.linspace(0, 9.6, 12))
    assert all(scan.converged)
    for mu, res, _ in scan.entries:
        assert mu.real < 0
        assert res <= 1e-8
    assert scan.min_abs_re > 0


def test_residual_definition(gen32):
    pair = nearest_eigenvalue(gen32, 5j)
    v = pair.vector
    r = gen32.norm(gen32.A @ v - pair.value * v) / gen32.norm(v)
    assert r == pytest.approx(pair.residual, rel=1e-6, abs=1e-14)


def test_conjugate_symmetry(gen32):
    lams = [1.0, 3.0, 5.5, 8.0]
    up = spectral_scan(gen32, lams).eigenvalues
    down = spectral_scan(gen32, [-l for l in lams]).eigenvalues
    np.testing.assert_allclose(down, np.conj(up), rtol=1e-9, atol=1e-9)


def test_low_band_stable_under_refinement(params):
    coarse = low_band(assemble_generator(params, build_mesh(params, 64, 8)))
    fine = low_band(assemble_generator(params, build_mesh(params, 128, 8)))
    assert coarse.size == fine.size
    a, b = np.sort_complex(coarse), np.sort_complex(fine)
    assert np.all(np.abs(np.abs(b.real) / np.abs(a.real) - 1) <= 0.2)
    assert np.min(np.abs(b.real)) == pytest.approx(np.min(np.abs(a.real)), rel=0.2)


def test_profile_of_exact_relation(gen16):
    m, p = gen16.mesh, gen16.params
    rng = np.random.default_rng(0)
    mu = -0.3 + 4.0j
    v = StateVector.zeros(m, dtype=complex)
    v.q[:] = rng.standard_normal(m.N0)
    v.z[:] = v.q[:, None] * np.exp(-mu * p.tau * m.s)[None, :]
    assert delay_profile_check((mu, v.data), p, m) < 1e-15


def test_profile_of_upwind_relation_first_order(params):
    """Manufactured discrete profile z_k = q (1 + mu tau ds)^(-k): error O(ds)."""
    mu = -0.2 + 3.0j
    errs = []
    for M in (8, 16, 32, 64):
        m = build_mesh(params, 16, M)
        v = StateVector.zeros(m, dtype=complex)
        v.q[:] = np.sin(np.pi * m.x_q / params.ell0)
        k = np.arange(1, M + 1)
        v.z[:] = v.q[:, None] * (1 + mu * params.tau * m.ds) ** (-k)[None, :]
        gen = assemble_generator(params, m)
        errs.append(delay_profile_check((mu, v.data), params, m, norm=gen.norm))
    ratios = np.array(errs[1:]) / errs[:-1]
    np.testing.assert_allclose(ratios, 0.5, atol=0.05)


def test_eigenvector_profile_halves(params):
    m8, m16 = build_mesh(params, 32, 8), build_mesh(params, 32, 16)
    errs = []
    for m in (m8, m16):
        gen = assemble_generator(params, m)
        pair = nearest_eigenvalue(gen, 2.4j)
        errs.append(delay_profile_check(pair, params, m, norm=gen.norm))
    assert 0.35 <= errs[1] / errs[0] <= 0.65


def test_eigenpair_dataclass(gen32):
    pair = nearest_eigenvalue(gen32, 2j)
    assert isinstance(pair, EigenPair)
    assert pair.vector.shape == (gen32.dim,)
    assert pair.iterations >= 1


def test_spectrum_csv(gen32, tmp_path):
    scan = spectral_scan(gen32, [1.0, 2.0])
    lines = write_spectrum_csv(scan, tmp_path / "spectrum.csv").read_text().splitlines()
    assert lines[0] == "re,im,residual,delay_profile_error"
    assert len(lines) == 3
