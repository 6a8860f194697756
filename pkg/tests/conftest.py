import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from crsf.registry import CategoryProfile, Registry, ServiceRequest, SfProfile
from crsf.schema import SENSING_PARAMS, ServiceTypeSchema

# numba compiles on first call, so the first example of a property can be slow
settings.register_profile("crsf", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("crsf")

MID_PARAMS = (100.0, 50.0, 200.0, 5.0, 0.9, 0.05)


@pytest.fixture
def sensing_schema():
    cats = (CategoryProfile(1, (1.0,) * 6, 100.0, 5.0),
            CategoryProfile(2, (0.5, 0.2, 0.1, 0.3, 0.7, 0.4), 120.0, 8.0))
    return ServiceTypeSchema("sensing", SENSING_PARAMS, cats)


@pytest.fixture
def registry():
    return Registry({"sensing": SENSING_PARAMS, "localization": SENSING_PARAMS[:3]})


def sf(sf_id, subnet=None, capacity=40.0, params=MID_PARAMS, stype="sensing"):
    return SfProfile(sf_id, sf_id if subnet is None else subnet, stype, params, capacity)


def request(rid, weights, category=1, stype="sensing"):
    return ServiceRequest(rid, 0, stype, category, weights)


def random_instance(rng, r_max=6, m_max=4, ties=False):
    from crsf.solver import SelectionInstance
    r = int(rng.integers(0, r_max + 1))
    m = int(rng.integers(0, m_max + 1))
    c = rng.uniform(0, 10, (r, m))
    if ties:
        c = np.round(c)
    feas = rng.random((r, m)) < 0.8
    u = rng.integers(5, 11, r).astype(float)
    cap = rng.uniform(5, 20, m)
    return SelectionInstance(c, feas, u, cap)
