"""Even-stride index sampling: frozen examples, oracle parity, dedup."""

import warnings

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dynbench import InvalidArg, SampleCollisionWarning, sample_indices
from dynbench.sampling import HAVE_JIT, _stride_core


def direct_oracle(n: int, s: int) -> list[int]:
    """Literal floor-formula evaluation with order-preserving dedup."""
    raw = [k * (n - 1) // s for k in range(s)]
    out = []
    for v in raw:
        if not out or out[-1] != v:
            out.append(v)
    return out


class TestFrozenExamples:
    def test_single_pick_is_index_zero(self):
        assert sample_indices(10, 1) == [0]

    def test_ten_choose_five(self):
        assert sample_indices(10, 5) == [0, 1, 3, 5, 7]

    def test_full_sample_collapses_with_warning(self):
        with pytest.warns(SampleCollisionWarning):
            assert sample_indices(5, 5) == [0, 1, 2, 3]

    def test_single_item_dataset(self):
        assert sample_indices(1, 1) == [0]


class TestValidation:
    def test_zero_dataset_size(self):
        with pytest.raises(InvalidArg):
            sample_indices(0, 1)

    def test_zero_sample_count(self):
        with pytest.raises(InvalidArg):
            sample_indices(10, 0)

    def test_sample_count_above_dataset_size(self):
        with pytest.raises(InvalidArg):
            sample_indices(3, 4)

    def test_negative_arguments(self):
        with pytest.raises(InvalidArg):
            sample_indices(-5, 1)
        with pytest.raises(InvalidArg):
            sample_indices(5, -1)

    def test_non_integer_arguments(self):
        with pytest.raises(InvalidArg):
            sample_indices(10.0, 5)
        with pytest.raises(InvalidArg):
            sample_indices(10, "5")


class TestOracleParity:
    def test_exhaustive_small(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", SampleCollisionWarning)
            for n in range(1, 120):
                for s in range(1, n + 1):
                    assert sample_indices(n, s) == direct_oracle(n, s), (n, s)

    @settings(max_examples=300)
    @given(st.integers(1, 5000))
    def test_random_pairs(self, n):
        import random

        s = random.Random(n).randint(1, n)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", SampleCollisionWarning)
            assert sample_indices(n, s) == direct_oracle(n, s)


class TestProperties:
    @settings(max_examples=200)
    @given(st.integers(2, 1000), st.data())
    def test_strictly_increasing_in_range_starting_at_zero(self, n, data):
        s = data.draw(st.integers(1, n))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", SampleCollisionWarning)
            picks = sample_indices(n, s)
        assert picks[0] == 0
        assert all(a < b for a, b in zip(picks, picks[1:]))
        assert all(0 <= p <= n - 1 for p in picks)
        assert len(picks) == len({k * (n - 1) // s for k in range(s)})

    @settings(max_examples=200)
    @given(st.integers(2, 1000), st.data())
    def test_no_collisions_when_stride_at_least_one(self, n, data):
        """S <= N/2 keeps the stride >= 1, so all S picks are distinct."""
        s = data.draw(st.integers(1, n // 2))
        with warnings.catch_warnings():
            warnings.simplefilter("error", SampleCollisionWarning)
            picks = sample_indices(n, s)
        assert len(picks) == s

    def test_warning_fires_exactly_on_collision(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error", SampleCollisionWarning)
            sample_indices(10, 5)  # no collision: must not warn
        with pytest.warns(SampleCollisionWarning):
            sample_indices(2, 2)  # raw [0, 0] collapses


class TestFallbackParity:
    def test_jit_is_active_here(self):
        assert HAVE_JIT is True

    def test_python_fallback_matches_compiled_core(self, monkeypatch):
        """Reload the module with the JIT blocked; same picks either way."""
        import importlib.util
        import sys

        monkeypatch.setitem(sys.modules, "numba", None)  # import -> ImportError
        spec = importlib.util.find_spec("dynbench.sampling")
        fallback = importlib.util.module_from_spec(spec)
        spec.loader.exec_module(fallback)
        assert fallback.HAVE_JIT is False

        for n, s in [(1, 1), (2, 2), (10, 5), (97, 31), (300, 30), (1000, 999)]:
            assert list(fallback._stride_core(n, s)) == list(_stride_core(n, s))
            assert list(fallback._stride_core(n, s)) == direct_oracle(n, s)
