import pytest
from hypothesis import given, strategies as st

from crsf.registry import (CategoryProfile, ConflictError, InvalidValueError, LatencyMatrix,
                           NotFoundError, QosParamDescriptor, Registry, SchemaError, ServiceRequest,
                           validate_service_type)
from crsf.schema import (SENSING_PARAMS, ServiceTypeSchema, dump_schemas, load_schemas,
                         schema_from_dict, schema_to_dict)

from conftest import MID_PARAMS, sf


def test_register_into_empty_registry(registry):
    registry.register_sf(sf(1))
    assert len(registry) == 1
    assert registry.entries[1].last_update_slot == 0


def test_reregistration_replaces_profile(registry):
    registry.register_sf(sf(1, capacity=30))
    registry.register_sf(sf(1, capacity=42))
    assert len(registry) == 1
    assert registry.snapshot("sensing")[0].capacity == 42


def test_wrong_parameter_count_is_a_schema_error(registry):
    with pytest.raises(SchemaError):
        registry.register_sf(sf(1, params=MID_PARAMS[:5]))


def test_parameter_outside_descriptor_range(registry):
    with pytest.raises(SchemaError):
        registry.register_sf(sf(1, params=(1000.0,) + MID_PARAMS[1:]))


def test_unknown_service_type(registry):
    with pytest.raises(SchemaError):
        registry.register_sf(sf(1, stype="energy"))


def test_second_sf_in_same_subnetwork_conflicts(registry):
    registry.register_sf(sf(1, subnet=7))
    with pytest.raises(ConflictError) as err:
        registry.register_sf(sf(2, subnet=7))
    assert err.value.code == "conflict"


def test_same_subnetwork_may_offer_another_service_type(registry):
    registry.register_sf(sf(1, subnet=7))
    registry.register_sf(sf(2, subnet=7, stype="localization", params=MID_PARAMS[:3]))
    assert len(registry) == 2


def test_update_capacity(registry):
    registry.register_sf(sf(1, capacity=30))
    registry.advance_slot()
    entry = registry.update_capacity(1, 45)
    assert entry.profile.capacity == 45
    assert entry.last_update_slot == 1


def test_update_unknown_sf(registry):
    with pytest.raises(NotFoundError):
        registry.update_capacity(99, 10)


@pytest.mark.parametrize("bad", [-1.0, float("nan"), float("inf")])
def test_update_rejects_bad_capacity(registry, bad):
    registry.register_sf(sf(1))
    with pytest.raises(InvalidValueError):
        registry.update_capacity(1, bad)


def test_snapshot_filters_by_type(registry):
    for i in (1, 2, 3):
        registry.register_sf(sf(i))
    registry.register_sf(sf(4, stype="localization", params=MID_PARAMS[:3]))
    assert [p.sf_id for p in registry.snapshot("sensing")] == [1, 2, 3]
    assert registry.snapshot("nothing") == ()


def test_snapshot_is_isolated_from_later_updates(registry):
    registry.register_sf(sf(1, capacity=30))
    snap = registry.snapshot("sensing")
    registry.update_capacity(1, 50)
    assert snap[0].capacity == 30


def test_deregister(registry):
    registry.register_sf(sf(1))
    registry.deregister_sf(1)
    assert 1 not in registry
    with pytest.raises(NotFoundError):
        registry.deregister_sf(1)


@pytest.mark.parametrize("name", ["", "Sensing", "a b", "-x", "x-"])
def test_invalid_service_type_names(name):
    with pytest.raises(SchemaError):
        validate_service_type(name)


def test_request_validation():
    with pytest.raises(InvalidValueError):
        ServiceRequest(1, 0, "sensing", 1, {1: 0.0})
    req = ServiceRequest(1, 0, "sensing", 1, {"3": 2})
    assert req.priority_weights == {3: 2.0}


def test_category_validation():
    with pytest.raises(InvalidValueError):
        CategoryProfile(1, (0.5,), 0.0, 5.0)
    with pytest.raises(InvalidValueError):
        CategoryProfile(1, (-0.5,), 100.0, 5.0)
    with pytest.raises(InvalidValueError):
        CategoryProfile(1, (0.5,), 100.0, 0.0)


def test_descriptor_range_must_be_nonempty():
    with pytest.raises(SchemaError):
        QosParamDescriptor("x", "", "benefit", 1.0, 1.0)


def test_latency_matrix():
    lat = LatencyMatrix()
    lat.set_row(1, {1: 70.0, 2: 80.0})
    assert lat.get(1, 2) == 80.0
    assert lat.missing([1, 2], [1, 2]) == [(2, 1), (2, 2)]
    with pytest.raises(InvalidValueError):
        lat.set_row(1, {1: -1.0})


def test_schema_round_trip(tmp_path, sensing_schema):
    path = tmp_path / "schemas.json"
    dump_schemas({"sensing": sensing_schema}, path)
    assert load_schemas(path) == {"sensing": sensing_schema}
    assert schema_from_dict("sensing", schema_to_dict(sensing_schema)) == sensing_schema


def test_schema_rejects_weight_length_mismatch():
    with pytest.raises(SchemaError):
        ServiceTypeSchema("sensing", SENSING_PARAMS, (CategoryProfile(1, (1.0,), 100.0, 5.0),))


def test_schema_from_dict_reports_missing_keys():
    with pytest.raises(SchemaError):
        schema_from_dict("sensing", {"params": []})


ops = st.lists(st.tuples(st.sampled_from(["reg", "cap", "dereg"]), st.integers(1, 6),
                         st.integers(1, 4), st.floats(0, 60)), max_size=40)


@given(ops)
def test_registry_invariants_hold_under_random_operations(seq):
    reg = Registry({"sensing": SENSING_PARAMS})
    for op, sf_id, subnet, cap in seq:
        try:
            if op == "reg":
                reg.register_sf(sf(sf_id, subnet=subnet, capacity=cap))
            elif op == "cap":
                reg.update_capacity(sf_id, cap)
            else:
                reg.deregister_sf(sf_id)
        except (ConflictError, NotFoundError):
            pass
        subnets = [e.profile.subnetwork_id for e in reg.entries.values()]
        assert len(subnets) == len(set(subnets))
        assert all(k == e.profile.sf_id for k, e in reg.entries.items())
        assert all(e.profile.capacity >= 0 for e in reg.entries.values())


@given(st.permutations([1, 2, 3, 4, 5]))
def test_snapshot_is_sorted_and_order_insensitive(order):
    reg = Registry({"sensing": SENSING_PARAMS})
    for i in order:
        reg.register_sf(sf(i))
    assert [p.sf_id for p in reg.snapshot("sensing")] == [1, 2, 3, 4, 5]


@given(st.floats(0, 100))
def test_register_is_idempotent(cap):
    reg = Registry({"sensing": SENSING_PARAMS})
    reg.register_sf(sf(1, capacity=cap))
    first = reg.snapshot("sensing")
    reg.register_sf(sf(1, capacity=cap))
    assert reg.snapshot("sensing") == first
