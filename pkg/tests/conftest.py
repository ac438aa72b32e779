import json

import numpy as np
import pytest

from mirm import binomial_forward, diffusion_pde, finite_market, forward_field


@pytest.fixture(scope="session")
def market():
    return finite_market.build_example_market()


@pytest.fixture(scope="session")
def family(market):
    return finite_market.emm_family(market)


@pytest.fixture(scope="session")
def lattice3():
    return binomial_forward.build_lattice(binomial_forward.FactorModelSpec.uniform(3))


@pytest.fixture(scope="session")
def lattice5():
    return binomial_forward.build_lattice(binomial_forward.FactorModelSpec.uniform(5))


@pytest.fixture(scope="session")
def field_spec():
    return forward_field.CoefficientSpec()


@pytest.fixture(scope="session")
def field_bundle(field_spec):
    return forward_field.simulate(field_spec, 20_000, seed=7)


@pytest.fixture(scope="session")
def sv_spec():
    return diffusion_pde.SVModelSpec()


@pytest.fixture(scope="session")
def coarse_grid():
    return diffusion_pde.Grid1D(n_y=121, steps_per_unit=100)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def write_json(tmp_path):
    def write(name, doc):
        path = tmp_path / name
        path.write_text(json.dumps(doc))
        return path

    return write
