from hypothesis import given
from hypothesis import strategies as st

from charvol.words import (exponent_sums, free_reduce, invert_word,
                           make_word, nilpotent_class2_data, sign_character)

letters = st.integers(min_value=-3, max_value=3).filter(lambda g: g != 0)
word_strategy = st.lists(letters, max_size=30).map(tuple)


def test_free_reduce_cancellation():
    assert free_reduce([1, -1]) == ()
    assert free_reduce([1, 2, -2, 1]) == (1, 1)
    assert free_reduce([]) == ()


def test_free_reduce_nested():
    assert free_reduce([1, 2, 3, -3, -2, -1]) == ()
    assert free_reduce([2, 1, -1, -2, 2]) == (2,)


@given(word_strategy)
def test_free_reduce_idempotent(w):
    once = free_reduce(w)
    assert free_reduce(once) == once


@given(word_strategy)
def test_inverse_reduces_to_identity(w):
    assert free_reduce(tuple(w) + invert_word(w)) == ()


def test_make_word_validates_range():
    import pytest
    with pytest.raises(ValueError):
        make_word([1, 3], 2)
    with pytest.raises(ValueError):
        make_word([0], 2)


def test_exponent_sums():
    assert exponent_sums([1, 2, -1, -2, 1], 2) == [1, 0]
    assert exponent_sums([], 3) == [0, 0, 0]


def test_sign_character_multiplicative():
    eps = [1, -1]
    assert sign_character([1, 2], eps) == -1
    assert sign_character([2, 2], eps) == 1
    assert sign_character([-2], eps) == -1


@given(word_strategy, word_strategy)
def test_class2_data_multiplicative(w1, w2):
    n = 3
    a1, c1 = nilpotent_class2_data(w1, n)
    a2, c2 = nilpotent_class2_data(w2, n)
    a12, c12 = nilpotent_class2_data(tuple(w1) + tuple(w2), n)
    assert a12 == [x + y for x, y in zip(a1, a2)]
    from charvol.words import wedge
    w = wedge(a1, a2)
    assert c12 == [x + y + z for x, y, z in zip(c1, c2, w)]


def test_class2_commutator_is_doubled_wedge():
    # the wedge cocycle extension evaluates [x, y] to twice the basic pairing
    _, c = nilpotent_class2_data([1, 2, -1, -2], 2)
    assert c == [2]
