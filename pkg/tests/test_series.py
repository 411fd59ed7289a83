"""Core series arithmetic against independently computed expectations."""

from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from baileyforge import (
    ContextMismatchError,
    DivergentProductError,
    EvalContext,
    Monomial,
    NonUnitLeadingError,
    ZDegreeError,
    dilate,
    equal_up_to,
    first_mismatch,
    monomial,
    one,
    poch_finite,
    poch_infinite,
    qbinomial,
    render,
    zero,
)

import oracles

CTX20 = EvalContext(scale=1, order=20)

# oracle: Euler pentagonal recurrence, partition_counts(20)
PARTITIONS = [1, 1, 2, 3, 5, 7, 11, 15, 22, 30, 42, 56, 77, 101, 135, 176,
              231, 297, 385, 490, 627]

# oracle: pentagonal number theorem, euler_product_coeffs(20)
EULER = [1, -1, -1, 0, 0, 1, 0, 1, 0, 0, 0, 0, -1, 0, 0, -1, 0, 0, 0, 0, 0]

# oracle: gaussian_binom_poly via the additive recurrence
QBINOM_4_2 = [1, 1, 2, 1, 1]
QBINOM_6_3 = [1, 1, 2, 3, 3, 3, 3, 2, 1, 1]

# oracle: tl_poch((1,1,0),1,2): (z;q)_2 = 1 - z - z*q + z^2*q
POCH_Z_2 = {(0, 0): F(1), (0, 1): F(-1), (1, 1): F(-1), (1, 2): F(1)}

# by hand: (z;q)_1 (q/z;q)_1 = 1 - z + q - q/z
POCH_PAIR_1 = {(0, 0): F(1), (0, 1): F(-1), (1, -1): F(-1), (1, 0): F(1)}


def todict(s):
    return {(qe, ze): c for qe, ze, c in s.terms()}


class TestBuilders:
    def test_zero_one(self):
        assert zero(CTX20).is_zero()
        assert todict(one(CTX20)) == {(0, 0): F(1)}
        assert one(CTX20).min_exponent() == 0
        assert zero(CTX20).min_exponent() is None

    def test_monomial_basic(self):
        m = monomial(CTX20, F(3, 2), zexp=-1, qexp=4)
        assert todict(m) == {(4, -1): F(3, 2)}
        assert monomial(CTX20, 0).is_zero()
        assert monomial(CTX20, 1, 0, 21).is_zero()

    def test_monomial_folding_positive(self):
        ctx = EvalContext(order=10, z_interp=Monomial(1, 3))
        m = monomial(ctx, 2, zexp=2, qexp=1)
        assert todict(m) == {(7, 0): F(2)}

    def test_monomial_folding_negative_sign(self):
        ctx = EvalContext(order=10, z_interp=Monomial(-1, 1))
        assert todict(monomial(ctx, 1, 3, 2)) == {(5, 0): F(-1)}
        assert todict(monomial(ctx, 1, -2, 4)) == {(2, 0): F(1)}
        assert todict(monomial(ctx, 1, -1, 4)) == {(3, 0): F(-1)}

    def test_z_guard(self):
        # order 10 admits |zexp| <= 5 (binom(5,2)=10); 6 must abort
        ctx = EvalContext(order=10)
        monomial(ctx, 1, 5, 0)
        with pytest.raises(ZDegreeError):
            monomial(ctx, 1, 6, 0)

    def test_z_guard_scale2(self):
        ctx = EvalContext(scale=2, order=50)
        monomial(ctx, 1, 7, 0)
        with pytest.raises(ZDegreeError):
            monomial(ctx, 1, 8, 0)


class TestRingOps:
    def test_add_sub(self):
        a = monomial(CTX20, 1, 0, 1) + monomial(CTX20, 2, 1, 1)
        b = a - monomial(CTX20, 2, 1, 1)
        assert todict(b) == {(1, 0): F(1)}
        assert (a - a).is_zero()

    def test_scalar(self):
        a = monomial(CTX20, F(1, 2), 0, 3) * 4
        assert todict(a) == {(3, 0): F(2)}
        assert (a * 0).is_zero()
        assert todict(2 + zero(CTX20)) == {(0, 0): F(2)}

    def test_mul_truncates(self):
        a = monomial(CTX20, 1, 0, 15)
        b = monomial(CTX20, 1, 0, 10)
        assert (a * b).is_zero()

    def test_context_mismatch(self):
        other = EvalContext(order=10)
        with pytest.raises(ContextMismatchError):
            one(CTX20) + one(other)
        with pytest.raises(ContextMismatchError):
            first_mismatch(one(CTX20), one(other))

    def test_pow(self):
        s = one(CTX20) + monomial(CTX20, 1, 0, 1)
        cube = s**3
        assert [cube.coefficient(n) for n in range(4)] == [1, 3, 3, 1]
        assert equal_up_to(s**0, one(CTX20))


class TestInvert:
    def test_partition_series(self):
        pe = poch_infinite(CTX20, (1, 0, 1), 1)
        assert [pe.coefficient(n) for n in range(21)] == EULER
        pinv = pe.invert()
        assert [pinv.coefficient(n) for n in range(21)] == PARTITIONS
        assert equal_up_to(pe * pinv, one(CTX20))

    def test_shifted_leading(self):
        s = monomial(CTX20, 2, 0, 3) + monomial(CTX20, 1, 0, 5)
        inv = s.invert()
        assert equal_up_to(s * inv, one(CTX20))
        assert inv.min_exponent() == -3

    def test_z_leading_inverse_trips_guard(self):
        # inverse of a z-leading series has unbounded z-degree; guard aborts
        s = monomial(CTX20, 2, 1, 3) + monomial(CTX20, 1, 0, 5)
        with pytest.raises(ZDegreeError):
            s.invert()

    def test_non_monomial_leading_rejected(self):
        s = one(CTX20) - monomial(CTX20, 1, 1, 0)
        with pytest.raises(NonUnitLeadingError):
            s.invert()
        with pytest.raises(NonUnitLeadingError):
            zero(CTX20).invert()


class TestPochhammer:
    def test_finite_z(self):
        assert todict(poch_finite(CTX20, (1, 1, 0), 1, 2)) == POCH_Z_2

    def test_finite_pair(self):
        p = poch_finite(CTX20, (1, 1, 0), 1, 1) * poch_finite(CTX20, (1, -1, 1), 1, 1)
        assert todict(p) == POCH_PAIR_1

    def test_finite_validation(self):
        with pytest.raises(ValueError):
            poch_finite(CTX20, (1, 0, 1), 1, -1)
        with pytest.raises(ValueError):
            poch_finite(CTX20, (1, 0, 1), 0, 2)
        assert equal_up_to(poch_finite(CTX20, (1, 0, 1), 1, 0), one(CTX20))

    def test_infinite_strict_rejects_nonpositive(self):
        with pytest.raises(DivergentProductError):
            poch_infinite(CTX20, (-1, 0, 0), 1)
        with pytest.raises(DivergentProductError):
            poch_infinite(CTX20, (2, 0, -1), 1)

    def test_infinite_zero_collapse(self):
        # the factor (1 - q^0) = 0 collapses the whole product in either mode
        assert poch_infinite(CTX20, (1, 0, 0), 1, strict=False).is_zero()
        assert poch_infinite(CTX20, (1, 0, 0), 1).is_zero()
        folded = EvalContext(order=20, z_interp=Monomial(1, 0))
        assert poch_infinite(folded, (1, 1, 0), 1).is_zero()

    def test_infinite_relaxed_laurent(self):
        # (1 - 2q^{-1}) * (1-2) * (1-2q) * ... handled exactly when relaxed
        s = poch_infinite(CTX20, (2, 0, -1), 1, strict=False)
        assert s.min_exponent() < 0
        ref = one(CTX20)
        for t in range(22):
            ref = ref * (one(CTX20) - monomial(CTX20, 2, 0, -1 + t))
        assert equal_up_to(s, ref)

    def test_infinite_formal_z_base(self):
        # (z;q)_inf is fine in strict mode: factors carry z
        s = poch_infinite(CTX20, (1, 1, 0), 1)
        assert s.coefficient(0, 0) == 1
        assert s.coefficient(0, 1) == -1

    def test_scale2_step(self):
        ctx = EvalContext(scale=2, order=12)
        # (q^(1/2); q)_inf: base exponent 1, step 2 in scaled units
        s = poch_infinite(ctx, (1, 0, 1), 2)
        assert s.coefficient(1) == -1
        assert s.coefficient(2) == 0
        assert s.coefficient(3) == -1


class TestQBinomial:
    def test_small(self):
        qb = qbinomial(CTX20, 4, 2)
        assert [qb.coefficient(n) for n in range(5)] == QBINOM_4_2
        qb = qbinomial(CTX20, 6, 3)
        assert [qb.coefficient(n) for n in range(10)] == QBINOM_6_3

    def test_edges(self):
        assert qbinomial(CTX20, 5, -1).is_zero()
        assert qbinomial(CTX20, 5, 6).is_zero()
        assert equal_up_to(qbinomial(CTX20, 5, 0), one(CTX20))
        assert equal_up_to(qbinomial(CTX20, 5, 5), one(CTX20))

    def test_oracle_cross(self):
        for n in range(9):
            for k in range(n + 1):
                ref = oracles.gaussian_binom_poly(n, k)
                qb = qbinomial(CTX20, n, k)
                got = [qb.coefficient(e) for e in range(min(20, len(ref) - 1) + 1)]
                assert got == [F(c) for c in ref[: len(got)]]

    def test_symmetry(self):
        assert equal_up_to(qbinomial(CTX20, 9, 4), qbinomial(CTX20, 9, 5))


class TestCompareRender:
    def test_first_mismatch(self):
        a = one(CTX20) + monomial(CTX20, 2, 1, 3)
        b = one(CTX20) + monomial(CTX20, 3, 1, 3) + monomial(CTX20, 1, 0, 2)
        qe, ze, ca, cb = first_mismatch(a, b)
        assert (qe, ze, ca, cb) == (2, 0, F(0), F(1))
        assert first_mismatch(a, a) is None
        assert equal_up_to(a, a)
        assert not equal_up_to(a, b)

    def test_dilate(self):
        pe = poch_infinite(CTX20, (1, 0, 1), 1)
        d = dilate(pe, 2)
        for n in range(11):
            assert d.coefficient(2 * n) == EULER[n]
            assert d.coefficient(2 * n + 1) == 0
        with pytest.raises(ValueError):
            dilate(pe, 0)

    def test_render_halves(self):
        ctx = EvalContext(scale=2, order=10)
        s = monomial(ctx, 1, 0, 3) + monomial(ctx, -2, 1, 4)
        text = render(s)
        assert "q^3/2" in text
        assert "q^2" in text
        assert "-2*z" in text
        assert render(zero(ctx)) == "0"


# Random series stay z-free: arbitrary z-monomials leave the guard region,
# while every z-carrying shape the engine builds grows quadratically in q.
small_series = st.lists(
    st.tuples(
        st.integers(min_value=0, max_value=12),
        st.just(0),
        st.integers(min_value=-4, max_value=4),
    ),
    max_size=6,
)


def build(terms):
    s = zero(CTX20)
    for qe, ze, c in terms:
        s = s + monomial(CTX20, c, ze, qe)
    return s


class TestProperties:
    @settings(max_examples=60, deadline=None)
    @given(small_series, small_series, small_series)
    def test_ring_axioms(self, ta, tb, tc):
        a, b, c = build(ta), build(tb), build(tc)
        assert equal_up_to(a + b, b + a)
        assert equal_up_to(a * b, b * a)
        assert equal_up_to((a + b) * c, a * c + b * c)
        assert equal_up_to((a * b) * c, a * (b * c))

    @settings(max_examples=40, deadline=None)
    @given(small_series)
    def test_invert_roundtrip(self, ta):
        s = one(CTX20) + monomial(CTX20, 1, 0, 1) * build(ta)
        assert equal_up_to(s * s.invert(), one(CTX20))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(min_value=0, max_value=8))
    def test_qbinom_theorem(self, n):
        # (z;q)_n = sum_j qbinom(n,j) (-1)^j q^(binom(j,2)) z^j
        lhs = poch_finite(CTX20, (1, 1, 0), 1, n)
        rhs = zero(CTX20)
        for j in range(n + 1):
            rhs = rhs + qbinomial(CTX20, n, j) * monomial(
                CTX20, (-1) ** j, j, j * (j - 1) // 2
            )
        assert equal_up_to(lhs, rhs)
