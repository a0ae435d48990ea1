import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crcca.entropy import entropy_bits, good_turing, good_turing_entropy, plugin_entropy_bits
from oracles import gale_sampson


def zipf_counts(seed, n=10_000, a=1.6):
    draws = np.random.default_rng(seed).zipf(a, n)
    vals, counts = np.unique(draws, return_counts=True)
    return dict(zip(vals.tolist(), counts.tolist()))


def test_missing_mass_example():
    est = good_turing({"a": 1, "b": 1, "c": 2})
    assert est.missing_mass == 0.5
    assert est.observed_mass + est.missing_mass == pytest.approx(1.0, abs=1e-10)


def test_no_singletons():
    est = good_turing({"a": 2, "b": 3, "c": 5, "d": 2})
    assert est.missing_mass == 0.0
    assert est.observed_mass == pytest.approx(1.0, abs=1e-10)


def test_errors():
    with pytest.raises(ValueError):
        good_turing({})
    with pytest.raises(ValueError):
        good_turing({"a": 0})
    with pytest.raises(ValueError):
        good_turing({"a": -1, "b": 3})


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_zipf_matches_oracle(seed):
    counts = zipf_counts(seed)
    est = good_turing(counts)
    p0, by_r = gale_sampson(list(counts.values()))
    assert est.missing_mass == p0
    for sym, c in counts.items():
        assert est.probabilities[sym] == pytest.approx(by_r[c], abs=1e-9)


def test_single_symbol_zero_entropy():
    assert entropy_bits(good_turing({"x": 40})) == 0.0


def test_uniform_four_symbols():
    est = good_turing({k: 25 for k in "abcd"})
    assert entropy_bits(est) == pytest.approx(2.0, abs=1e-9)


def test_large_counts_reduce_to_empirical():
    # every count far above the largest r, no singletons: smoothing changes nothing material
    rng = np.random.default_rng(8)
    counts = {i: int(c) for i, c in enumerate(rng.integers(10**7, 2 * 10**7, size=12))}
    est = good_turing(counts)
    n = sum(counts.values())
    for s, c in counts.items():
        assert est.probabilities[s] == pytest.approx(c / n, abs=1e-6)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(1, 60), min_size=1, max_size=80))
def test_mass_and_oracle_property(values):
    counts = dict(enumerate(values))
    est = good_turing(counts)
    n = sum(values)
    assert est.missing_mass == sum(v == 1 for v in values) / n
    assert est.observed_mass + est.missing_mass == pytest.approx(1.0, abs=1e-10)
    assert all(p >= 0 for p in est.probabilities.values())
    _, by_r = gale_sampson(values)
    for s, c in counts.items():
        assert est.probabilities[s] == pytest.approx(by_r[c], abs=1e-9)


def test_plugin_entropy():
    assert plugin_entropy_bits([5, 5, 5, 5]) == pytest.approx(2.0)
    assert plugin_entropy_bits({"a": 3}) == 0.0
    assert plugin_entropy_bits([0, 0]) == 0.0


def test_good_turing_entropy_on_cells(crcca9, synth):
    ids = crcca9.map_u.grid.assign(synth.x)
    h, p0 = good_turing_entropy(ids)
    assert 0 <= h <= 2 * np.log2(9)
    _, counts = np.unique(ids, return_counts=True)
    assert p0 == np.sum(counts == 1) / len(ids)
    # close to the plug-in value at n=5000 over 81 cells
    assert h == pytest.approx(plugin_entropy_bits(counts), abs=0.05)
