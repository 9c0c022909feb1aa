import numpy as np
import pytest

from mmkeygen import seeds


class TestStreamDerivation:
    def test_disjoint_labels_disjoint_streams(self):
        a = seeds.generator(7, seeds.STREAM_NOISE_ALICE).standard_normal(8)
        b = seeds.generator(7, seeds.STREAM_NOISE_BOB).standard_normal(8)
        assert not np.allclose(a, b)

    def test_same_address_same_stream(self):
        a = seeds.generator(7, 3, 1, 4).standard_normal(8)
        b = seeds.generator(7, 3, 1, 4).standard_normal(8)
        assert np.array_equal(a, b)

    def test_seed_range_enforced(self):
        with pytest.raises(ValueError, match="64-bit"):
            seeds.generator(-1)
        with pytest.raises(ValueError, match="64-bit"):
            seeds.seed_sequence(2**64)

    def test_derived_values_pinned(self):
        # reproducibility contract: these frozen values must never change, or
        # every published table silently shifts (see module docstring on
        # stream tags). Derived from numpy's stable SeedSequence hashing.
        pinned = {
            (0, seeds.STREAM_TRIAL, 1, 0, 0, 0): 10812685801258201774,
            (1, seeds.STREAM_CHANNEL): 77803131892610477,
            (42,): 11465652750463011511,
        }
        for address, value in pinned.items():
            assert seeds.derive_seed(*address) == value

    def test_u64_output(self):
        value = seeds.derive_seed(123, 4, 5)
        assert isinstance(value, int)
        assert 0 <= value < 2**64
