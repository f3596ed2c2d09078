"""Sampling layer: determinism, counter addressing, distribution moments."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lsvkit.ensembles import (
    ENSEMBLES,
    GAUSSIAN,
    RADEMACHER,
    STUDENT_T5,
    UNIFORM,
    EntryStream,
    SeedSpec,
    get_ensemble,
    sample_array,
    sample_entry,
    sample_matrix,
    sample_vector,
    uniform_stream,
)
from lsvkit.errors import InvalidDimension

# Regression pins for the frozen generation scheme.  If any of these move,
# every archived seed in every manifest silently means something else, so
# they are asserted bit-exactly.
_KEY_0_0 = 9206327630398885983
_KEY_1_2 = 6422034521767081036
_UNIFORMS_1_2 = [0.5904264981575295, 0.37364347710508483,
                 0.9373766889413174, 0.36754463030131734]
_GAUSSIAN_1_2 = [0.22864222405646564, -0.3222187852635538, 1.5331186547383568]
_RADEMACHER_1_2 = [1.0, -1.0, 1.0, -1.0, -1.0, 1.0]
_UNIFORM_1_2 = [0.31324657831874897, -0.4377118350434663, 1.515117294585221]
_T5_1_2 = [0.22614423355384253, 0.6477665934761796, -0.405284604626183]


def test_stream_key_pins():
    assert SeedSpec(0, 0).key() == _KEY_0_0
    assert SeedSpec(1, 2).key() == _KEY_1_2


def test_uniform_stream_pins_and_range():
    u = uniform_stream(SeedSpec(1, 2), 0, 4)
    assert u.tolist() == _UNIFORMS_1_2
    big = uniform_stream(SeedSpec(9, 9), 0, 100_000)
    assert big.min() > 0.0 and big.max() < 1.0


def test_entry_transform_pins():
    sd = SeedSpec(1, 2)
    assert sample_array(GAUSSIAN, (3,), sd).tolist() == _GAUSSIAN_1_2
    assert sample_array(RADEMACHER, (6,), sd).tolist() == _RADEMACHER_1_2
    assert sample_array(UNIFORM, (3,), sd).tolist() == _UNIFORM_1_2
    assert sample_array(STUDENT_T5, (3,), sd).tolist() == _T5_1_2


def test_repeat_sampling_is_bitwise_identical():
    sd = SeedSpec(123456789, 42)
    a = sample_matrix(GAUSSIAN, 8, sd)
    b = sample_matrix(GAUSSIAN, 8, sd)
    assert np.array_equal(a, b)


def test_distinct_streams_and_seeds_differ():
    a = sample_matrix(GAUSSIAN, 6, SeedSpec(5, 0))
    b = sample_matrix(GAUSSIAN, 6, SeedSpec(5, 1))
    c = sample_matrix(GAUSSIAN, 6, SeedSpec(6, 0))
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_entry_counter_is_row_major():
    sd = SeedSpec(7, 3)
    m = sample_matrix(GAUSSIAN, 5, sd)
    flat = sample_array(GAUSSIAN, (25,), sd)
    assert np.array_equal(m.reshape(-1), flat)
    # entry (i, j) individually addressable via its offset
    assert sample_array(GAUSSIAN, (1,), sd, entry_offset=2 * 5 + 4)[0] == m[2, 4]


@settings(max_examples=30, deadline=None)
@given(offset=st.integers(min_value=0, max_value=500), count=st.integers(min_value=1, max_value=64),
       kind=st.sampled_from(sorted(ENSEMBLES)))
def test_chunked_generation_matches_full_stream(offset, count, kind):
    ens = get_ensemble(kind)
    sd = SeedSpec(2024, 17)
    full = sample_array(ens, (offset + count,), sd)
    part = sample_array(ens, (count,), sd, entry_offset=offset)
    assert np.array_equal(full[offset:offset + count], part)


def test_entry_stream_matches_block_sampling():
    sd = SeedSpec(3, 14)
    stream = EntryStream(STUDENT_T5, sd)
    picked = [sample_entry(stream), sample_entry(stream)]
    picked.extend(stream.take(5).tolist())
    assert stream.position == 7
    assert picked == sample_array(STUDENT_T5, (7,), sd).tolist()


def test_dimension_validation():
    with pytest.raises(InvalidDimension):
        sample_matrix(GAUSSIAN, 1, SeedSpec(0, 0))
    with pytest.raises(InvalidDimension):
        sample_vector(GAUSSIAN, 0, SeedSpec(0, 0))


def test_seedspec_validation():
    with pytest.raises(ValueError):
        SeedSpec(-1, 0)
    with pytest.raises(ValueError):
        SeedSpec(0, 1 << 64)
    with pytest.raises(ValueError):
        SeedSpec(0.5, 0)


def test_get_ensemble_rejects_unknown():
    with pytest.raises(ValueError):
        get_ensemble("cauchy")


def test_rademacher_support_is_exact():
    vals = sample_array(RADEMACHER, (10_000,), SeedSpec(8, 0))
    assert set(np.unique(vals)) == {-1.0, 1.0}


def test_uniform_support_bound():
    vals = sample_array(UNIFORM, (10_000,), SeedSpec(8, 1))
    assert np.abs(vals).max() <= np.sqrt(3.0)


@pytest.mark.parametrize("kind", sorted(ENSEMBLES))
def test_million_draw_moments(kind):
    # mean within 0.01 and variance within 0.02 of the nominal 0/1 at 1e6 draws
    ens = get_ensemble(kind)
    vals = sample_array(ens, (1_000_000,), SeedSpec(314159, 0))
    assert abs(float(vals.mean())) <= 0.01
    assert abs(float(vals.var()) - 1.0) <= 0.02


@pytest.mark.parametrize("kind", ["gaussian", "rademacher", "uniform"])
def test_fourth_moment_within_five_percent(kind):
    # student_t5 is excluded: its 4th-moment estimator has infinite variance
    # (the 8th moment diverges), so no fixed trial count certifies 5%
    ens = get_ensemble(kind)
    vals = sample_array(ens, (1_000_000,), SeedSpec(271828, 0))
    m4 = float(np.mean(vals**4))
    assert abs(m4 - ens.fourth_moment) <= 0.05 * ens.fourth_moment


def test_declared_fourth_moments():
    assert GAUSSIAN.fourth_moment == 3.0
    assert RADEMACHER.fourth_moment == 1.0
    assert UNIFORM.fourth_moment == 9.0 / 5.0
    assert STUDENT_T5.fourth_moment == 9.0
    assert not STUDENT_T5.subgaussian
    assert all(ENSEMBLES[k].subgaussian for k in ("gaussian", "rademacher", "uniform"))
