import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from aggregate_cases import gen_items, gen_value
from aggtree.aggregate import BUILTIN_SPECS, AggregateSpec, float_spec, get_spec

SPECS = sorted(BUILTIN_SPECS)


def items_strategy(name):
    if name == "donations":
        vals = st.lists(st.sampled_from("abc"), max_size=3)
    elif name == "product":
        vals = st.integers(-5, 5).filter(bool)
    else:
        vals = st.integers(-50, 50)
    return st.dictionaries(st.integers(-100, 100), vals, max_size=12).map(lambda d: sorted(d.items()))


@pytest.mark.parametrize("name", SPECS)
def test_group_laws_on_random_leaves(name):
    spec = get_spec(name)
    rng = random.Random(name)
    for _ in range(200):
        a, b, c = (spec.fold(gen_items(rng, name, 4)) for _ in range(3))
        assert spec.combine(a, spec.combine(b, c)) == spec.combine(spec.combine(a, b), c)
        assert spec.combine(a, b) == spec.combine(b, a)
        assert spec.combine(a, spec.identity) == a
        assert spec.subtract(spec.combine(a, b), b) == a


@pytest.mark.parametrize("name", SPECS)
def test_insert_and_delete_simulation(name):
    spec = get_spec(name)

    @given(items_strategy(name), st.data())
    def check(items, data):
        keys = [k for k, _ in items]
        k = data.draw(st.integers(-100, 100).filter(lambda x: x not in keys))
        v = gen_value(random.Random(k), name)
        with_k = sorted(items + [(k, v)])
        assert spec.fold(with_k) == spec.combine(spec.fold(items), spec.leaf_value(k, v))
        assert spec.fold(items) == spec.subtract(spec.fold(with_k), spec.leaf_value(k, v))

    check()


def test_known_values():
    items = [(1, 3), (5, 4), (9, 8)]
    assert get_spec("count").fold(items) == 3
    assert get_spec("keysum").fold(items) == 15
    assert get_spec("valsum").fold(items) == 15
    assert get_spec("sumsq").fold(items) == 89
    assert get_spec("product").fold(items) == 96
    assert get_spec("sumsize").fold(items) == (15, 3)
    assert get_spec("moments").fold(items) == (15, 89, 3)
    assert get_spec("donations").fold([(10, ["a", "b"]), (3, ["c"])]) == 23


def test_product_inverse_stays_exact():
    p = get_spec("product")
    assert p.subtract(6, 4) == Fraction(3, 2)
    assert p.subtract(12, 4) == 3 and isinstance(p.subtract(12, 4), int)
    with pytest.raises(ValueError):
        p.leaf_value(1, 0)


def test_count_only_on_counting_specs():
    assert get_spec("count").count(7) == 7
    assert get_spec("moments").count((1, 2, 3)) == 3
    assert get_spec("keysum").count is None


def test_get_spec_rejects_unknown_names():
    with pytest.raises(ValueError, match="unknown aggregate"):
        get_spec("median")
    s = get_spec("count")
    assert get_spec(s) is s


def test_float_spec_uses_tolerance():
    f = float_spec(get_spec("valsum"))
    assert not f.exact
    a = f.fold([(1, 0.1), (2, 0.2)])
    assert f.close(f.subtract(f.combine(a, 0.3), 0.3), a)
    assert not f.close(a, a + 1e-3)


def test_custom_spec():
    maxish = AggregateSpec("xor", lambda k, v: k, lambda a, b: a ^ b, lambda a, b: a ^ b, 0)
    assert maxish.fold([(1, None), (3, None)]) == 2
