import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from yode import rng
from yode.errors import DimensionError, IntervalError, PathFormatError
from yode.paths import (
    DiscretePath,
    Grid,
    dumps_keyvalue,
    dumps_path,
    freeze_values,
    loads_path,
    read_keyvalue,
)


def test_grid_basics():
    g = Grid(0.0, 1.0, 5)
    assert g.step == 0.25 and g.index_of(0.75) == 3
    assert g.steps(0.5) == 2
    with pytest.raises(IntervalError):
        g.index_of(0.3)
    with pytest.raises(IntervalError):
        Grid(1.0, 1.0, 3)
    with pytest.raises(IntervalError):
        Grid(0.0, 1.0, 1)
    assert Grid.dyadic(3).n_points == 9


@given(st.integers(2, 3000), st.floats(-5, 5), st.floats(0.01, 50))
def test_index_time_roundtrip(n, t0, span):
    g = Grid(t0, t0 + span, n)
    for i in {0, n // 3, n - 1}:
        assert g.index_of(g.time(i)) == i


def test_path_validation():
    g = Grid(0, 1, 3)
    with pytest.raises(DimensionError):
        DiscretePath(g, [1.0, 2.0])
    with pytest.raises(PathFormatError):
        DiscretePath(g, [0.0, np.nan, 1.0])
    p = DiscretePath(g, [0.0, 1.0, 2.0])
    with pytest.raises(ValueError):
        p.values[0] = 5.0


def test_csv_roundtrip_bitwise():
    g = Grid(0.0, 1.0, 33)
    v = np.column_stack([np.sin(g.times * 7.1), np.exp(g.times) / 3])
    p = DiscretePath(g, v)
    q = loads_path(dumps_path(p))
    assert q.equals(p)


def test_csv_format_linear():
    text = dumps_path(DiscretePath(Grid(0, 1, 3), [0.0, 0.5, 1.0]))
    assert text == "t,v1\n0,0\n0.5,0.5\n1,1\n"


@pytest.mark.parametrize(
    "text",
    ["", "x,v1\n0,0\n1,1\n", "t,v1\n0,0\n", "t,v1\n0,0\n1,a\n", "t,v1\n0,0\n0.3,1\n1,2\n", "t,v1\n1,0\n0,1\n"],
)
def test_csv_rejects_bad_files(text):
    with pytest.raises(PathFormatError):
        loads_path(text)


def test_keyvalue_roundtrip(tmp_path):
    f = tmp_path / "m.kv"
    f.write_text(dumps_keyvalue({"a": 0.1, "b": True, "c": None, "d": "x=y"}))
    kv = read_keyvalue(f)
    assert kv == {"a": "0.10000000000000001", "b": "true", "c": "", "d": "x=y"}


def test_freeze_values():
    v = np.arange(5.0)[:, None]
    assert freeze_values(v, 2)[:, 0].tolist() == [0, 1, 2, 2, 2]


# -- random streams ----------------------------------------------------------


def test_streams_deterministic_and_distinct():
    a = rng.normals(42, 3, 100)
    assert np.array_equal(a, rng.normals(42, 3, 100))
    assert not np.array_equal(a, rng.normals(42, 4, 100))
    assert not np.array_equal(a, rng.normals(43, 3, 100))


def test_stream_reader_matches_bulk():
    s = rng.Stream(5, 2)
    got = np.concatenate([s.normal(3), [s.normal()], s.normal(6)])
    assert np.array_equal(got, rng.normals(5, 2, 10))


def test_uniform_transform_pins_version():
    # the transform of the first raw word, written out by hand
    w = int(rng.raw_words(0, 0, 1)[0])
    assert rng.uniforms(0, 0, 1)[0] == ((w >> 11) + 0.5) * 2.0**-53
    assert rng.VERSION == "philox4x64-ndtri/1"


def test_uniforms_open_interval_and_moments():
    u = rng.uniforms(1, 0, 200_000)
    assert 0.0 < u.min() and u.max() < 1.0
    z = rng.normals(1, 1, 200_000)
    assert abs(z.mean()) < 5 / np.sqrt(len(z))
    assert abs(z.var() - 1) < 5 * np.sqrt(2 / len(z))


@given(st.integers(0, 2**40), st.integers(-50, 50), st.integers(1, 100))
def test_integers_in_range(seed, lo, width):
    s = rng.Stream(seed, 1)
    k = s.integers(lo, lo + width, 50)
    assert k.min() >= lo and k.max() < lo + width


def test_negative_seed_rejected():
    with pytest.raises(ValueError):
        rng.bit_generator(-1)
