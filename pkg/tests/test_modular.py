import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from crt_armor.errors import (
    InputError,
    NonIntegerGamma,
    NotAscending,
    NotCoprime,
    OutOfRange,
)
from crt_armor.modular import (
    ResidueTable,
    WrappedValue,
    circle_distance,
    common_residue,
    crt_coefficients,
    crt_reconstruct,
    validate_system,
    wrap,
    xgcd,
)


def test_validate_system_small():
    s = validate_system(1, 1, [3, 5], 2)
    assert s.Gamma == 4
    assert s.m == (12, 20)


def test_validate_system_protocol():
    s = validate_system(2, 25, [3, 5, 7, 11, 13, 17], 4)
    assert s.Gamma == 200
    assert s.m == (600, 1000, 1400, 2200, 2600, 3400)
    assert s.max_bad == 1
    assert s.info_range == 3 * 5 * 7 * 11
    assert s.q_range == s.info_range - 2


@pytest.mark.parametrize("args, exc", [
    ((1, 1, [4, 6], 2), NotCoprime),
    ((1, 1, [5, 3], 2), NotAscending),
    ((1, 1, [3, 3], 2), NotAscending),
    ((1, 0.3, [3, 5], 2), NonIntegerGamma),
    ((1, 1, [], 1), InputError),
    ((1, 1, [1, 3], 2), InputError),
    ((1, 1, [3, 5], 3), InputError),
    ((0, 1, [3, 5], 2), InputError),
    ((1, -1, [3, 5], 2), InputError),
])
def test_validate_system_rejects(args, exc):
    with pytest.raises(exc):
        validate_system(*args)


def test_validate_system_q_range():
    assert validate_system(1, 1, [3, 5, 7], 2, q_range=10).q_range == 10
    assert validate_system(1, 1, [3, 5, 7], 2, q_range=10).search_range == 12
    assert validate_system(1, 1, [3, 5, 7], 2).search_range == 15
    with pytest.raises(InputError):
        validate_system(1, 1, [3, 5, 7], 2, q_range=16)


def test_fractional_delta_with_integer_gamma():
    s = validate_system(2, 0.5, [3, 5], 2)
    assert s.Gamma == 4


@pytest.mark.parametrize("pairs, expected", [
    ([(0, 3), (1, 5)], 6),
    ([(0, 3), (0, 5), (0, 7)], 0),
    ([(2, 3), (2, 5), (3, 7), (6, 11), (4, 13)], 17),
])
def test_crt_reconstruct_examples(pairs, expected):
    assert crt_reconstruct(pairs) == expected


def test_crt_reconstruct_matches_enumeration():
    pairs = [(2, 3), (2, 5), (3, 7), (6, 11), (4, 13)]
    brute = [x for x in range(15015) if all(x % m == v for v, m in pairs)]
    assert brute == [crt_reconstruct(pairs)]


def test_crt_reconstruct_rejects():
    with pytest.raises(NotCoprime):
        crt_reconstruct([(1, 4), (1, 6)])
    with pytest.raises(OutOfRange):
        crt_reconstruct([(5, 3)])


def test_crt_round_trip_exhaustive():
    for M in ([3, 5, 7], [3, 5, 7, 11]):
        P = math.prod(M)
        assert all(crt_reconstruct([(x % m, m) for m in M]) == x for x in range(P))


def test_crt_coefficients_are_idempotents():
    moduli = (3, 5, 7, 11)
    P, e = crt_coefficients(moduli)
    assert P == 1155
    for j, mj in enumerate(moduli):
        for k, mk in enumerate(moduli):
            assert e[j] % mk == (1 if j == k else 0)


@given(st.integers(1, 10**12), st.integers(1, 10**12))
def test_xgcd(a, b):
    g, s, t = xgcd(a, b)
    assert g == math.gcd(a, b)
    assert s * a + t * b == g


@pytest.mark.parametrize("x, y, G, d", [(3.5, 0.5, 4, 1.0), (1.7, 1.7, 4, 0.0), (0, 2, 4, 2.0)])
def test_circle_distance_examples(x, y, G, d):
    assert circle_distance(x, y, G) == pytest.approx(d)


def test_circle_distance_metric_properties(rng):
    G = 7
    pts = rng.uniform(-20, 20, size=(10_000, 3))
    for x, y, z in pts:
        dxy = circle_distance(x, y, G)
        assert dxy == pytest.approx(circle_distance(y, x, G))
        assert 0 <= dxy <= G / 2 + 1e-12
        assert dxy <= circle_distance(x, z, G) + circle_distance(z, y, G) + 1e-9


def test_circle_distance_brute_force(rng):
    for x, y in rng.uniform(-10, 10, size=(200, 2)):
        brute = min(abs(x - y + z * 4) for z in range(-10, 11))
        assert circle_distance(x, y, 4) == pytest.approx(brute)


@pytest.mark.parametrize("r, c", [(25.5, 1.5), (-0.5, 3.5), (4.0, 0.0)])
def test_common_residue_examples(r, c):
    assert common_residue(r, 4).value == pytest.approx(c)


@given(st.floats(-1e4, 1e4, allow_nan=False), st.integers(-1000, 1000))
def test_common_residue_periodic(r, k):
    a = common_residue(r, 12).value
    b = common_residue(r + 12 * k, 12).value
    assert circle_distance(a, b, 12) < 1e-7


def test_wrap_snaps_to_zero():
    assert wrap(12 - 1e-12, 12) == 0.0
    assert 0 <= wrap(-1e-300, 12) < 12


def test_wrapped_value_range():
    with pytest.raises(OutOfRange):
        WrappedValue(4.0, 4)


def test_residue_table_check(system_w):
    ResidueTable.build([[1.5], [4.5], [25.0], [10.0]], system_w)
    with pytest.raises(InputError):
        ResidueTable.build([[1.5], [4.5], [25.0]], system_w)
    with pytest.raises(InputError):
        ResidueTable.build([[1.5, 2.0], [4.5], [25.0], [10.0]], system_w)
    with pytest.raises(InputError):
        ResidueTable.build([[], [4.5], [25.0], [10.0]], system_w)
    with pytest.raises(OutOfRange):
        ResidueTable.build([[12.0], [4.5], [25.0], [10.0]], system_w)
    with pytest.raises(OutOfRange):
        ResidueTable.build([[np.nan], [4.5], [25.0], [10.0]], system_w)
