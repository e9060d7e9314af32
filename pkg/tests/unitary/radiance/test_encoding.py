import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twinnav.radiance.field import EncodingConfig, positional_encode

st_coord = st.floats(min_value=-1.0, max_value=1.0)


def _loop_encode(v, L):
    out = list(v)
    for k in range(L):
        for fn in (math.sin, math.cos):
            for x in v:
                out.append(fn(2 ** k * math.pi * x))
    return out


def test_zero_vector_single_band():
    assert positional_encode([0.0, 0.0, 0.0], 1).tolist() == [0, 0, 0, 0, 0, 0, 1, 1, 1]


def test_empty_spectrum_returns_input():
    v = np.array([0.25, -0.5, 0.75])
    assert np.array_equal(positional_encode(v, 0), v)


@given(x=st_coord, y=st_coord, z=st_coord)
@settings(max_examples=100)
def test_matches_scalar_loop(x, y, z):
    expected = _loop_encode([x, y, z], 4)
    assert np.allclose(positional_encode([x, y, z], 4), expected, rtol=0, atol=1e-12)


@pytest.mark.parametrize("L", [0, 1, 4, 6, 10])
def test_output_length(L):
    assert positional_encode(np.zeros(3), L).shape == (3 + 6 * L,)


def test_batch_rows_are_independent():
    rng = np.random.default_rng(0)
    batch = rng.uniform(-1, 1, (5, 3))
    encoded = positional_encode(batch, 3)
    for v, row in zip(batch, encoded):
        assert np.array_equal(positional_encode(v, 3), row)


def test_config_dimensions():
    cfg = EncodingConfig(6, 4)
    assert (cfg.position_dim, cfg.direction_dim) == (39, 27)


@pytest.mark.parametrize("L_x, L_d", [(-1, 4), (6, -2), (1.5, 4)])
def test_config_rejects_invalid(L_x, L_d):
    with pytest.raises(ValueError):
        EncodingConfig(L_x, L_d)
