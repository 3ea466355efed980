import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from qdesign.errors import BudgetExceeded, DimensionError, FormatError
from qdesign.qsystem import (QExtension, SignedQSystem, boundary, bounded_wrt, codegree_profile,
                             count_extensions, is_bounded, parse, serialize, typicality_check)
from qdesign.subspace import Subspace, enumerate_grassmannian, gaussian_binomial, unpack

import oracles


def as_set(S):
    return frozenset(unpack(v, S.q, S.n) for v in S.vectors())


def full(n, k, q=2):
    return SignedQSystem.from_subspaces(enumerate_grassmannian(n, k, q), q, n, k)


def random_system(q, n, k, rng, density=0.3, lo=-3, hi=3):
    out = SignedQSystem(q, n, k)
    for S in enumerate_grassmannian(n, k, q):
        if rng.random() < density:
            c = rng.randint(lo, hi)
            if c:
                out.add_to(S, c)
    return out


def test_boundary_of_plane_is_three_lines():
    S = Subspace.full(2, 2)
    d = boundary(SignedQSystem.unit(S), 1)
    assert len(d) == 3 and all(c == 1 for _, c in d.items())


def test_boundary_of_cancelling_pair_is_zero():
    S = Subspace.full(2, 2)
    Phi = SignedQSystem.unit(S) - SignedQSystem.unit(S)
    assert Phi.is_zero()
    assert boundary(Phi, 1).is_zero()


def test_boundary_rejects_r_above_k():
    with pytest.raises(DimensionError):
        boundary(full(3, 1), 2)


@pytest.mark.parametrize("q,n,s,r", [(2, 4, 2, 1), (2, 4, 3, 1), (2, 4, 3, 2), (3, 3, 2, 1)])
def test_boundary_matches_naive(q, n, s, r):
    rng = random.Random(n * 7 + s)
    Phi = random_system(q, n, s, rng)
    ours = boundary(Phi, r)
    naive = oracles.naive_boundary([(as_set(S), c) for S, c in Phi.items()], r, q, n)
    got = {as_set(R): c for R, c in ours.items()}
    assert got == {R: c for R, c in naive.items() if c}


def test_boundary_composition_exhaustive():
    q, n = 2, 4
    for s in range(1, 4):
        for S in enumerate_grassmannian(n, s, q):
            e = SignedQSystem.unit(S)
            for t in range(0, s + 1):
                for r in range(0, t + 1):
                    lhs = boundary(boundary(e, t), r)
                    rhs = boundary(e, r).scale(gaussian_binomial(s - r, t - r, q))
                    assert lhs == rhs


@settings(max_examples=25)
@given(st.integers(0, 10 ** 6), st.integers(-5, 5), st.integers(-5, 5))
def test_boundary_is_linear(seed, a, b):
    rng = random.Random(seed)
    P, Q = random_system(2, 4, 2, rng), random_system(2, 4, 2, rng)
    lhs = boundary(P.scale(a) + Q.scale(b), 1)
    rhs = boundary(P, 1).scale(a) + boundary(Q, 1).scale(b)
    assert lhs == rhs


def test_positive_negative_parts():
    rng = random.Random(3)
    P = random_system(2, 4, 2, rng, density=0.6)
    assert P.positive_part() + P.negative_part() == P
    assert all(c > 0 for _, c in P.positive_part().items())
    assert all(c < 0 for _, c in P.negative_part().items())
    assert all(c != 0 for _, c in P.items())


def test_wrong_dimension_key_rejected():
    P = SignedQSystem(2, 4, 2)
    with pytest.raises(DimensionError):
        P.add_to(Subspace.full(2, 4), 1)


def test_codegree_full_points():
    assert codegree_profile(full(4, 1)) == (15, 0)


def test_codegree_single_space():
    R = enumerate_grassmannian(4, 2, 2)[3]
    assert codegree_profile(SignedQSystem.unit(R)) == (1, 0)
    assert codegree_profile(SignedQSystem.unit(R, -2)) == (0, 2)


def test_codegree_boundary_of_plane():
    S = enumerate_grassmannian(4, 2, 2)[0]
    assert codegree_profile(boundary(SignedQSystem.unit(S), 1)) == (3, 0)


def test_codegree_needs_positive_dimension():
    with pytest.raises(DimensionError):
        codegree_profile(SignedQSystem(2, 3, 0))


def test_codegree_monotone_under_restriction():
    rng = random.Random(9)
    J = random_system(2, 4, 2, rng, density=0.7, lo=1, hi=4)
    a, _ = codegree_profile(J)
    items = J.items()
    sub = SignedQSystem(2, 4, 2, dict(items[: len(items) // 2]))
    assert codegree_profile(sub)[0] <= a


def test_is_bounded():
    J = full(4, 1)
    assert is_bounded(J, Fraction(1))
    assert not is_bounded(J, Fraction(1, 2))


def point_pattern(q=2):
    return tuple(enumerate_grassmannian(2, 1, q))


def test_extensions_without_outside_edges():
    # H inside F only: every injective completion counts
    F_line = Subspace.coordinate(2, 2, 1)
    E = QExtension(2, 3, 2, 1, (F_line,), (1,))
    assert count_extensions(E, SignedQSystem(2, 3, 1)) == 2 ** 3 - 2


def test_extensions_into_empty_host():
    E = QExtension(2, 3, 2, 1, point_pattern(), (1,))
    assert count_extensions(E, SignedQSystem(2, 3, 1)) == 0


def test_extend_point_to_line_full_host():
    E = QExtension(2, 3, 2, 1, point_pattern(), (1,))
    assert count_extensions(E, full(3, 1)) == 6


def test_extensions_match_brute_force_on_random_host():
    rng = random.Random(4)
    G = random_system(2, 4, 1, rng, density=0.5, lo=1, hi=1)
    E = QExtension(2, 4, 2, 1, point_pattern(), (1,))
    pts = {unpack(R.rows[0], 2, 4) for R in G.support()}
    base = (0, 0, 0, 1)
    want = 0
    for v in oracles.vectors(4, 2):
        if any(v) and v != base:
            s = tuple((a + b) % 2 for a, b in zip(v, base))
            if v in pts and s in pts and base in pts:
                want += 1
    assert count_extensions(E, G) == want


@pytest.mark.parametrize("v", [1, 2])
def test_full_host_closed_form(v):
    q, n, f = 2, 4, 1
    t = f + v
    F = Subspace.coordinate(q, t, f)
    H = tuple(R for R in enumerate_grassmannian(t, 1, q) if not F.contains(R))
    E = QExtension(q, n, t, f, H, (1,))
    want = 1
    for i in range(v):
        want *= q ** n - q ** (f + i)
    assert count_extensions(E, full(n, 1, q)) == want


def test_extension_validation():
    with pytest.raises(DimensionError):
        QExtension(2, 3, 2, 2, (), (1, 1))
    with pytest.raises(DimensionError):
        QExtension(2, 3, 2, 1, (Subspace.full(2, 3),), (1,))


def test_extension_budget():
    E = QExtension(2, 6, 3, 0, (), ())
    with pytest.raises(BudgetExceeded):
        count_extensions(E, SignedQSystem(2, 6, 1), budget=100)


def test_typicality_full_host_passes():
    res = typicality_check(full(4, 1), Fraction(1, 2), 2)
    assert res.passed
    assert res.worst_deviation < Fraction(1, 2)


def test_typicality_empty_host_fails():
    res = typicality_check(SignedQSystem(2, 4, 1), Fraction(1), 2)
    assert not res.passed


def test_typicality_random_host_reports_worst():
    rng = random.Random(1)
    G = random_system(2, 4, 1, rng, density=0.5, lo=1, hi=1)
    res = typicality_check(G, Fraction(1, 100), 2)
    assert res.worst is not None and res.worst_deviation >= 0
    assert res.classes_checked > 0


def test_bounded_zero_passes():
    res = bounded_wrt(SignedQSystem(2, 4, 1), full(4, 1), Fraction(0), 2)
    assert res.passed


def test_bounded_full_host_theta_one():
    res = bounded_wrt(full(4, 1), full(4, 1), Fraction(1), 2)
    assert res.passed


def test_bounded_concentrated_fails():
    R = enumerate_grassmannian(4, 1, 2)[0]
    J = SignedQSystem.unit(R, 2 ** 4 + 1)
    res = bounded_wrt(J, full(4, 1), Fraction(1), 2)
    assert not res.passed
    assert res.worst["R"]


def test_bounded_shape_mismatch():
    with pytest.raises(DimensionError):
        bounded_wrt(full(4, 1), full(4, 2), Fraction(1), 2)


def test_serialize_empty_roundtrip():
    P = SignedQSystem(2, 4, 2)
    assert parse(serialize(P)) == P


def test_serialize_signed_roundtrip():
    G = enumerate_grassmannian(4, 2, 2)
    P = SignedQSystem(2, 4, 2, {G[0]: 3, G[5]: -2})
    text = serialize(P)
    assert parse(text) == P
    assert serialize(parse(text)) == text


def test_serialize_full_grassmannian():
    P = full(4, 2)
    assert len(P) == 35
    assert parse(serialize(P)) == P


@settings(max_examples=30)
@given(st.integers(0, 10 ** 6))
def test_serialize_property(seed):
    P = random_system(3, 3, 2, random.Random(seed), density=0.5, lo=-9, hi=9)
    text = serialize(P)
    assert parse(text) == P and serialize(parse(text)) == text


@pytest.mark.parametrize("text,line", [
    ("", 1),
    ("qsys q=2 n=3 k=1\n", 1),
    ("qsystem q=2 n=3 k=1\n1 100\nx 010\n", 3),
    ("qsystem q=2 n=3 k=1\n1 100\n1 110;011\n", 3),
    ("qsystem q=2 n=3 k=1\n0 100\n", 2),
    ("qsystem q=2 n=3 k=1\n1 100\n2 100\n", 3),
    ("qsystem q=2 n=3 k=1\n1 1020\n", 2),
])
def test_parse_errors_report_line(text, line):
    with pytest.raises(FormatError, match=f"line {line}"):
        parse(text)
