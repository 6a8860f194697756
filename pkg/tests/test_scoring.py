import numpy as np
import pytest
from hypothesis import given, strategies as st

from crsf.registry import CategoryProfile, Direction, QosParamDescriptor
from crsf.schema import SENSING_PARAMS
from crsf.scoring import (ScoringError, build_coefficients, category_qos, normalize_params,
                          request_qos, score_matrix)

from conftest import MID_PARAMS, request, sf

BENEFIT = QosParamDescriptor("range", "m", Direction.BENEFIT, 50, 300)
COST = QosParamDescriptor("latency", "ms", Direction.COST, 10, 500)


def test_normalize_endpoints_and_midpoint():
    assert normalize_params([50], [BENEFIT])[0] == 0.0
    assert normalize_params([10], [COST])[0] == 1.0
    assert normalize_params([175], [BENEFIT])[0] == 0.5


def test_normalize_rejects_out_of_range():
    with pytest.raises(ScoringError):
        normalize_params([301], [BENEFIT])
    with pytest.raises(ScoringError):
        normalize_params([1, 2], [BENEFIT])


def test_category_qos_examples():
    assert category_qos([0, 0, 0], [3, 4, 5]) == 0
    assert category_qos([1, 1, 1], [3, 4, 5]) == 12
    assert category_qos([0.5, 0.2], [4, 10]) == pytest.approx(4.0)
    with pytest.raises(ScoringError):
        category_qos([1], [1, 2])


def _cats(*rows):
    return [CategoryProfile(k + 1, w, 100.0, 5.0) for k, w in enumerate(rows)]


def test_request_qos_selects_its_category_row():
    profiles = [sf(1, params=MID_PARAMS), sf(2, params=(20.0, 10.0, 50.0, 1.0, 0.6, 0.01))]
    cats = _cats((0,) * 6, (0.5,) * 6, (1,) * 6)
    scores = score_matrix(profiles, cats)
    req = request(1, {1: 1, 2: 1}, category=2)
    assert request_qos(req, scores, 1) == pytest.approx(0.5 * sum(MID_PARAMS))
    assert request_qos(request(2, {1: 1}, category=1), scores, 2) == 0
    # one-hot sum over every category collapses to the chosen row
    gamma = [1.0 if c.category_id == 2 else 0.0 for c in cats]
    brute = sum(g * category_qos(c.weights, MID_PARAMS) for g, c in zip(gamma, cats))
    assert request_qos(req, scores, 1) == pytest.approx(brute)
    with pytest.raises(ScoringError):
        request_qos(req, scores, 9)


def test_unit_priorities_give_q_rows():
    profiles = [sf(1), sf(2, params=(20.0, 10.0, 50.0, 1.0, 0.6, 0.01))]
    cats = _cats((1,) * 6, (0.1,) * 6)
    reqs = [request(1, {1: 1, 2: 1}, 1), request(2, {1: 1, 2: 1}, 2)]
    coeffs = build_coefficients(reqs, profiles, cats)
    q = score_matrix(profiles, cats).q
    np.testing.assert_allclose(coeffs.c, q)


def test_scalar_coefficient():
    profiles = [sf(1, params=(20.0, 10.0, 50.0, 1.0, 1.0, 0.0))]
    w = (0.0, 0.0, 0.0, 4.0, 0.0, 0.0)  # Q = 4 * resolution(1.0) = 4
    coeffs = build_coefficients([request(1, {1: 3})], profiles, _cats(w))
    assert coeffs.c.tolist() == [[12.0]]


def test_two_by_two_matches_elementwise_arithmetic():
    p1 = (100.0, 50.0, 200.0, 5.0, 0.9, 0.05)
    p2 = (300.0, 20.0, 80.0, 12.0, 0.7, 0.02)
    profiles = [sf(1, params=p1), sf(2, params=p2)]
    cats = _cats((0.2, 0.4, 0.6, 0.8, 1.0, 0.5), (1.0, 0.1, 0.3, 0.9, 0.2, 0.7))
    reqs = [request(10, {1: 2.0, 2: 7.0}, 2), request(11, {1: 9.5, 2: 1.0}, 1)]
    got = build_coefficients(reqs, profiles, cats).c
    for i, req in enumerate(reqs):
        w = cats[req.category_id - 1].weights
        for j, p in enumerate((p1, p2)):
            q = 0.0
            for wn, pn in zip(w, p):
                q += wn * pn
            assert got[i, j] == pytest.approx(req.priority_weights[j + 1] * q, rel=1e-12)


def test_missing_priority_is_rejected():
    with pytest.raises(ScoringError):
        build_coefficients([request(1, {1: 1.0})], [sf(1), sf(2)], _cats((1,) * 6))


def test_mixed_service_types_rejected():
    reqs = [request(1, {1: 1.0}, stype="localization")]
    with pytest.raises(ScoringError):
        build_coefficients(reqs, [sf(1)], _cats((1,) * 6))


def test_normalized_mode_needs_descriptors():
    with pytest.raises(ScoringError):
        score_matrix([sf(1)], _cats((1,) * 6), None, "normalized")


in_range = st.tuples(*[st.floats(d.range_min, d.range_max) for d in SENSING_PARAMS])
weights = st.tuples(*[st.floats(0, 1) for _ in SENSING_PARAMS])


@given(st.lists(in_range, min_size=1, max_size=4), st.lists(weights, min_size=1, max_size=3))
def test_normalized_scores_lie_between_zero_and_weight_sum(params, ws):
    profiles = [sf(i + 1, params=p) for i, p in enumerate(params)]
    cats = [CategoryProfile(k + 1, w, 100.0, 5.0) for k, w in enumerate(ws)]
    q = score_matrix(profiles, cats, SENSING_PARAMS, "normalized").q
    for k, w in enumerate(ws):
        assert np.all(q[k] >= -1e-12)
        assert np.all(q[k] <= sum(w) + 1e-12)


@given(in_range, in_range, weights, st.floats(1, 10), st.floats(1, 10), st.floats(0.01, 100))
def test_scaling_priorities_scales_row_and_keeps_argmax(p1, p2, w, s1, s2, lam):
    profiles = [sf(1, params=p1), sf(2, params=p2)]
    cats = [CategoryProfile(1, w, 100.0, 5.0)]
    base = build_coefficients([request(1, {1: s1, 2: s2})], profiles, cats).c[0]
    scaled = build_coefficients([request(1, {1: lam * s1, 2: lam * s2})], profiles, cats).c[0]
    np.testing.assert_allclose(scaled, lam * base, rtol=1e-12, atol=1e-300)
    assert np.argmax(scaled) == np.argmax(base) or np.isclose(base[0], base[1], rtol=1e-12)


@given(st.lists(in_range, min_size=2, max_size=4, unique=True), st.randoms(use_true_random=False),
       st.sampled_from(["raw", "normalized"]))
def test_coefficients_are_permutation_equivariant(params, rnd, mode):
    profiles = [sf(i + 1, params=p) for i, p in enumerate(params)]
    cats = _cats((0.3, 0.5, 0.1, 0.9, 0.4, 0.2))
    reqs = [request(1, {p.sf_id: float(p.sf_id) for p in profiles})]
    perm = list(range(len(profiles)))
    rnd.shuffle(perm)
    a = build_coefficients(reqs, profiles, cats, mode, SENSING_PARAMS)
    b = build_coefficients(reqs, [profiles[i] for i in perm], cats, mode, SENSING_PARAMS)
    np.testing.assert_array_equal(b.c[0], a.c[0][perm])
    assert b.sf_order == tuple(a.sf_order[i] for i in perm)
