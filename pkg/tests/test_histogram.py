import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fwcibench import histogram
from fwcibench.histogram import build_histogram, from_text, log_transform, to_text


def test_basic_counts():
    h = build_histogram([0.05, 0.15, 0.15], 0.0, 0.3, 3)
    assert h.counts.tolist() == [1, 2, 0]
    assert h.n_dropped == 0


def test_value_at_hi_is_dropped():
    h = build_histogram([0.3], 0.0, 0.3, 3)
    assert h.counts.sum() == 0 and h.n_dropped == 1


def test_value_at_lo_is_kept():
    h = build_histogram([0.0], 0.0, 0.3, 3)
    assert h.counts.tolist() == [1, 0, 0]


@pytest.mark.parametrize("lo,hi,n", [(1.0, 1.0, 3), (2.0, 1.0, 3), (0.0, 1.0, 0), (0.0, 1.0, -2)])
def test_bad_arguments(lo, hi, n):
    with pytest.raises(ValueError):
        build_histogram([0.5], lo, hi, n)


def test_centers_and_width():
    h = build_histogram([], 1.0, 3.0, 4)
    assert h.width == 0.5
    assert np.allclose(h.centers, [1.25, 1.75, 2.25, 2.75])


def test_sum_matches_direct_scan():
    draws = np.exp(-0.0761 + 0.933 * np.random.default_rng(3).standard_normal(10_000))
    h = build_histogram(draws, 0.0, 8.0, 80)
    in_range = int(((draws >= 0.0) & (draws < 8.0)).sum())
    assert int(h.counts.sum()) == in_range
    assert h.n_dropped == draws.size - in_range


def test_agrees_with_numpy_away_from_edges():
    rng = np.random.default_rng(17)
    lo, hi, n = 0.0, 8.0, 37
    width = (hi - lo) / n
    v = rng.uniform(lo, hi, 5000)
    # keep a guard band around every bin edge so both conventions agree
    frac = (v - lo) / width
    v = v[np.abs(frac - np.round(frac)) > 1e-6]
    ours = build_histogram(v, lo, hi, n)
    ref, _ = np.histogram(v, bins=np.linspace(lo, hi, n + 1))
    assert ours.counts.tolist() == ref.tolist()


finite_vals = st.lists(st.floats(min_value=-50, max_value=50, allow_nan=False), max_size=80)


@given(finite_vals, st.integers(1, 40))
def test_conservation(values, n_bins):
    h = build_histogram(values, -3.0, 5.0, n_bins)
    assert int(h.counts.sum()) + h.n_dropped == len(values)


@given(finite_vals, st.integers(1, 30))
def test_refinement_consistency(values, n_bins):
    coarse = build_histogram(values, -3.0, 5.0, n_bins)
    fine = build_histogram(values, -3.0, 5.0, 2 * n_bins)
    for i in range(n_bins):
        assert coarse.counts[i] == fine.counts[2 * i] + fine.counts[2 * i + 1]


def test_counts_are_read_only():
    h = build_histogram([0.5], 0.0, 1.0, 2)
    with pytest.raises(ValueError):
        h.counts[0] = 5


# --- log_transform ---


def test_log_of_one_is_zero():
    assert log_transform([1.0], 0.01).tolist() == [0.0]


def test_zero_maps_to_shift_log():
    out = log_transform([0.0], 0.01)
    assert out[0] == pytest.approx(math.log(0.01))
    assert out[0] == pytest.approx(-4.605, abs=5e-4)


def test_log_of_e():
    assert log_transform([math.e], 0.01)[0] == pytest.approx(1.0)


def test_negative_input_rejected():
    with pytest.raises(ValueError):
        log_transform([-0.5], 0.01)


def test_nonpositive_shift_rejected():
    with pytest.raises(ValueError):
        log_transform([1.0], 0.0)


@settings(max_examples=50)
@given(st.lists(st.floats(min_value=0, max_value=100, allow_nan=False), min_size=2, max_size=50))
def test_log_transform_monotone(values):
    positive = [v for v in values if v > 0]
    shift = min(positive) if positive else 0.5
    out = log_transform(sorted(values), shift)
    assert all(a <= b for a, b in zip(out, out[1:]))


# --- serialization ---


def test_text_round_trip():
    h = build_histogram(np.random.default_rng(8).uniform(0, 8, 500), 0.0, 8.0, 23)
    back = from_text(to_text(h))
    assert back.lo == h.lo and back.hi == h.hi and back.n_bins == h.n_bins
    assert back.counts.tolist() == h.counts.tolist()
    assert back.n_dropped == h.n_dropped
    assert np.array_equal(back.centers, h.centers)


def test_from_text_rejects_garbage():
    with pytest.raises(ValueError):
        from_text("not a histogram")
