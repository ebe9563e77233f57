import pytest

from thermotimo import assemble_generator, build_mesh, default_params


@pytest.fixture(scope="session")
def params():
    return default_params()[0]


@pytest.fixture(scope="session")
def disc():
    return default_params()[1]


@pytest.fixture(scope="session")
def gen16(params):
    return assemble_generator(params, build_mesh(params, 16, 4))


@pytest.fixture(scope="session")
def gen32(params):
    return assemble_generator(params, build_mesh(params, 32, 8))


@pytest.fixture(scope="session")
def toy(params):
    """N=2, M=2: dim 8, small enough for dense oracles."""
    return assemble_generator(params, build_mesh(params, 2, 2))


def random_state(gen, rng, complex_valued=True, normalize=True):
    x = rng.standard_normal(gen.dim)
    if complex_valued:
        x = x + 1j * rng.standard_normal(gen.dim)
    if normalize:
        x /= gen.norm(x)
    return x


def random_params(rng, base):
    """A valid coefficient set with either sign of mu2."""
    mu1 = rng.uniform(0.2, 3.0)
    mu2 = rng.uniform(0.05, 0.95) * mu1 * rng.choice([-1.0, 1.0])
    draw = {k: rng.uniform(0.3, 3.0) for k in
            ("rho1", "rho2", "rho3", "k1", "k2", "gamma", "delta", "tau")}
    return base.replace(mu1=mu1, mu2=mu2, **draw)
