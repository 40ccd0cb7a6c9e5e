import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from prosk import nottingham
from prosk.errors import UsageError
from prosk.matgroups import GroupDescriptor, ops_for
from prosk.nottingham import (
    NottElement,
    canonical_coordinates,
    from_canonical,
    generator,
    oracle_admissible,
    parse_series,
)
from prosk.rings import Ring, get_field

D5 = GroupDescriptor.parse("Nottingham,Fq[[t]]:q=5,N=8")
D5L = GroupDescriptor.parse("Nottingham,Fq[[t]]:q=5,N=16")
D9 = GroupDescriptor.parse("Nottingham,Fq[[t]]:q=9,N=6")

OPS5 = ops_for(D5)
OPS9 = ops_for(D9)


def series5(coeffs):
    return NottElement(D5, tuple(coeffs) + (0,) * (7 - len(coeffs)))


# --- frozen composition ------------------------------------------------------
# f = t + t^2, g = t + t^3.  Substituting f into g:
#   g(f) = f + f^3 = t + t^2 + t^3 + 3 t^4 + 3 t^5 + t^6 (exact over Z)
# The product f*g is defined as g o f, so its coefficients mod 5, N=8, are:


def test_composition_frozen():
    f = series5([1])
    g = series5([0, 1])
    prod = OPS5.mul(f, g)
    assert prod.coeffs == (1, 1, 3, 3, 1, 0, 0)


def test_identity_and_inverse():
    e = OPS5.identity()
    assert e.coeffs == (0,) * 7
    f = series5([2, 0, 1, 4])
    assert OPS5.mul(f, OPS5.inv(f)) == e
    assert OPS5.mul(OPS5.inv(f), f) == e


coeff_tuples = st.lists(st.integers(0, 4), min_size=7, max_size=7).map(tuple)


@given(coeff_tuples, coeff_tuples, coeff_tuples)
@settings(max_examples=60, deadline=None)
def test_associativity(a, b, c):
    f, g, h = NottElement(D5, a), NottElement(D5, b), NottElement(D5, c)
    assert OPS5.mul(OPS5.mul(f, g), h) == OPS5.mul(f, OPS5.mul(g, h))


@given(coeff_tuples)
@settings(max_examples=60, deadline=None)
def test_inverse_exact(a):
    f = NottElement(D5, a)
    assert OPS5.mul(f, OPS5.inv(f)) == OPS5.identity()


# --- depth and the commutator pairing ----------------------------------------


def test_depth_convention():
    assert OPS5.depth(OPS5.identity()) == 8
    assert OPS5.depth(series5([1])) == 1
    assert OPS5.depth(series5([0, 0, 2])) == 3


def test_commutator_leading_coefficient_orientation():
    # [e_1(1), e_2(1)] starts at degree 4 with coefficient 1*1*(2-1) = 1;
    # swapping the arguments flips it to -1 = 4 mod 5.
    e1 = generator(D5, 1, 1)
    e2 = generator(D5, 2, 1)
    c = OPS5.commutator(e1, e2)
    assert c.coeffs[2] == 1  # slot for t^4
    assert OPS5.commutator(e2, e1).coeffs[2] == 4
    assert OPS5.depth(c) == 3


def test_commutator_coefficient_sweep():
    # exhaustive over the truncation for q = 9: coefficient of t^(n+m+1)
    # in [e_n(lam), e_m(mu)] is lam*mu*(m-n), including the vanishing cases
    field = get_field(9)
    p = field.p
    ops = OPS9
    for n in range(1, 4):
        for m in range(1, 4):
            if n + m + 1 > 6:
                continue
            for lam in range(1, 9):
                for mu in range(1, 9):
                    c = ops.commutator(generator(D9, n, lam), generator(D9, m, mu))
                    want = field.mul_codes(
                        field.mul_codes(np.array([lam]), np.array([mu])),
                        np.array([(m - n) % p]),
                    )[0]
                    assert c.coeffs[n + m - 1] == want


def test_depth_pairing_on_kernels():
    rng = np.random.default_rng(30)
    ops = ops_for(D5L)
    for _ in range(150):
        n = int(rng.integers(1, 15))
        m = int(rng.integers(1, 15))
        g = ops.sample_kernel(n, rng)
        h = ops.sample_kernel(m, rng)
        assert ops.depth(ops.commutator(g, h)) >= min(n + m, 16)


# --- the oracle --------------------------------------------------------------


def test_oracle_admissible_table():
    # n <= m <= 2n, p does not divide m - n, and the window 2n + m fits
    assert not oracle_admissible(D5L, 1, 1)  # 5 | 0
    assert oracle_admissible(D5L, 1, 2)
    assert not oracle_admissible(D5L, 2, 2)
    assert oracle_admissible(D5L, 3, 4)
    assert not oracle_admissible(D5L, 2, 5)  # m > 2n
    assert oracle_admissible(D5L, 5, 6)  # window 2n + m = 16 just fits
    assert not oracle_admissible(D5L, 6, 7)  # window 19 overflows N = 16


def test_oracle_hits_targets():
    rng = np.random.default_rng(31)
    ops = ops_for(D5L)
    N = 16
    for n, m in ((1, 2), (2, 3), (2, 4), (3, 4), (4, 6), (5, 6)):
        if not oracle_admissible(D5L, n, m):
            continue
        for _ in range(20):
            r = ops.sample_kernel(n + m, rng)
            pairs = ops.oracle(r, n, m)
            acc = ops.identity()
            for a, b in pairs:
                assert ops.depth(a) >= n and ops.depth(b) >= m
                acc = ops.mul(acc, ops.commutator(a, b))
            assert ops.depth(ops.mul(ops.inv(acc), r)) >= min(2 * n + m, N)


def test_oracle_capped_when_window_overflows():
    rng = np.random.default_rng(32)
    ops = OPS5  # N = 8
    n, m = 3, 4
    r = ops.sample_kernel(7, rng)
    pairs = ops.oracle(r, n, m, capped=True)
    acc = ops.identity()
    for a, b in pairs:
        acc = ops.mul(acc, ops.commutator(a, b))
    assert ops.mul(ops.inv(acc), r) == ops.identity()  # 2n+m = 10 >= N


# --- coordinates and parsing -------------------------------------------------


@given(coeff_tuples)
@settings(max_examples=60, deadline=None)
def test_canonical_roundtrip(a):
    f = NottElement(D5, a)
    assert from_canonical(D5, canonical_coordinates(f)) == f


def test_parse_series():
    f = parse_series(D5, "t+2t^3+t^7")
    assert f.coeffs == (0, 2, 0, 0, 0, 1, 0)
    assert parse_series(D5, "t") == OPS5.identity()
    with pytest.raises(UsageError):
        parse_series(D5, "1+t")
    with pytest.raises(UsageError):
        parse_series(D5, "t+7t^2")  # coefficient outside F_5
    from prosk.errors import LevelTooLarge

    with pytest.raises(LevelTooLarge):
        parse_series(D5, "t+t^40")  # beyond the truncation


def test_quotient_and_kernel_orders():
    ops = OPS5
    assert ops.group_order() == 5**7
    assert ops.quotient_order(6) == 5**5
    assert ops.quotient_order(2) == 5


def test_sample_kernel_depths():
    rng = np.random.default_rng(33)
    for n in (1, 3, 6):
        for _ in range(20):
            g = OPS5.sample_kernel(n, rng)
            assert OPS5.depth(g) >= n


def test_power_matrix_evaluation_matches_direct():
    # the banded-substitution fast path must agree with plain composition
    rng = np.random.default_rng(34)
    ops = ops_for(D5L)
    for _ in range(10):
        fs = [ops.sample_uniform(rng) for _ in range(5)]
        acc = ops.identity()
        for f in fs:
            acc = ops.mul(acc, f)
        st = ops.eval_begin()
        for f in reversed(fs):
            st = ops.eval_apply(st, ops.power_matrix(f))
        assert ops.eval_finish(st) == acc
