import numpy as np

from qnlearn.numerics import Rng


def test_same_seed_label_gives_identical_streams():
    a = Rng(42).substream("weights")
    b = Rng(42).substream("weights")
    assert np.array_equal(a.normal(size=100), b.normal(size=100))
    assert np.array_equal(a.uniform(size=50), b.uniform(size=50))


def test_different_labels_are_independent():
    base = Rng(42)
    a = base.substream("one").normal(size=20)
    b = base.substream("two").normal(size=20)
    assert not np.array_equal(a, b)


def test_substream_unaffected_by_parent_draws():
    r1 = Rng(7)
    r1.normal(size=1000)
    child_after = r1.substream("x").normal(size=10)
    child_fresh = Rng(7).substream("x").normal(size=10)
    assert np.array_equal(child_after, child_fresh)


def test_nested_substreams_distinct():
    r = Rng(3)
    a = r.substream("a").substream("b").normal(size=5)
    b = r.substream("a/b").normal(size=5)
    # same composite label resolves to the same stream
    assert np.array_equal(a, b)


def test_permutation_reproducible():
    assert np.array_equal(Rng(1).permutation(30), Rng(1).permutation(30))
