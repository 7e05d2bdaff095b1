import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from focalzone.data import Sample
from focalzone.exceptions import ValidationError
from focalzone.rs import ExpandedSample, ReplicateShuffle, RSMap, apply_rs, make_rs_map, replication_factor


def test_identity_hook_tiles():
    m = make_rs_map(4, 10, shuffle=False)
    assert m.map.tolist() == [0, 1, 2, 3, 0, 1, 2, 3, 0, 1]
    assert m.h == 3


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 30), st.integers(1, 200), st.integers(0, 1000))
def test_every_source_dimension_is_used(K, extra, seed):
    Kp = K + extra
    m = make_rs_map(K, Kp, seed)
    counts = np.bincount(m.map, minlength=K)
    h = replication_factor(K, Kp)
    assert m.map.shape == (Kp,)
    assert (h - 1) * K < Kp <= h * K
    assert counts.max() <= h
    if Kp >= K:
        assert counts.min() >= 0


def test_each_dimension_appears_when_Kp_multiple():
    m = make_rs_map(8, 32, seed=3)
    assert np.bincount(m.map).tolist() == [4] * 8


def test_map_is_seeded():
    assert make_rs_map(8, 30, 1).map.tolist() == make_rs_map(8, 30, 1).map.tolist()
    assert make_rs_map(8, 30, 1).map.tolist() != make_rs_map(8, 30, 2).map.tolist()


@pytest.mark.parametrize("K,Kp", [(1, 10), (8, 8), (8, 4)])
def test_invalid_sizes(K, Kp):
    with pytest.raises(ValidationError):
        make_rs_map(K, Kp)


def test_apply_rs_gathers():
    m = make_rs_map(3, 7, seed=0)
    x = np.array([10.0, 20.0, 30.0])
    out = apply_rs(Sample(x, 2), m)
    assert isinstance(out, ExpandedSample) and out.label == 2
    np.testing.assert_array_equal(out.features, x[m.map])
    with pytest.raises(ValidationError):
        apply_rs(np.zeros(4), m)


def test_map_dict_round_trip_and_read_only():
    m = make_rs_map(5, 12, seed=9)
    assert RSMap.from_dict(m.to_dict()).map.tolist() == m.map.tolist()
    with pytest.raises(ValueError):
        m.map[0] = 1


def test_transformer():
    X = np.arange(12.0).reshape(3, 4)
    t = ReplicateShuffle(random_state=1).fit(X)
    assert t.transform(X).shape == (3, 16)
    assert t.get_params()["n_features_out"] is None
    np.testing.assert_array_equal(ReplicateShuffle.from_map(t.rs_map_).transform(X), t.transform(X))
