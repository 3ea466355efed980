import random

import pytest
from hypothesis import given, settings, strategies as st

from qdesign.errors import BudgetExceeded, DimensionError, FormatError
from qdesign.fields import build_tower, sample_injection
from qdesign.subspace import (Subspace, canonicalize, enumerate_grassmannian, enumerate_red_profiles,
                              extensions, gaussian_binomial, meet_join, r_subspaces_of,
                              random_subspace, span_dim_over_L, image_subspace, unpack)

import oracles


def as_set(S):
    return frozenset(unpack(v, S.q, S.n) for v in S.vectors())


GRASS_CASES = [(n, k, q) for q in (2, 3) for n in range(0, 5) for k in range(0, n + 1)
               if not (q == 3 and n == 4)]


@pytest.mark.parametrize("n,k,q", GRASS_CASES)
def test_grassmannian_matches_brute_force(n, k, q):
    ours = {as_set(S) for S in enumerate_grassmannian(n, k, q)}
    assert ours == oracles.grassmannian(n, k, q)
    assert len(enumerate_grassmannian(n, k, q)) == gaussian_binomial(n, k, q)


@pytest.mark.parametrize("n,k,q,value", [(4, 2, 2, 35), (6, 3, 2, 1395), (4, 2, 3, 130),
                                         (5, 2, 2, 155), (3, 1, 5, 31), (6, 2, 3, 11011)])
def test_gaussian_binomial_known_values(n, k, q, value):
    assert gaussian_binomial(n, k, q) == value


@given(st.integers(0, 9), st.integers(0, 9), st.sampled_from([2, 3, 4, 5, 7]))
def test_gaussian_symmetry_and_formula(n, k, q):
    assert gaussian_binomial(n, k, q) == oracles.gaussian_formula(n, k, q)
    if k <= n:
        assert gaussian_binomial(n, k, q) == gaussian_binomial(n, n - k, q)


@given(st.integers(1, 8), st.integers(1, 7))
def test_gaussian_pascal(n, k):
    q = 3
    if k <= n:
        lhs = gaussian_binomial(n, k, q)
        rhs = gaussian_binomial(n - 1, k - 1, q) + q ** k * gaussian_binomial(n - 1, k, q)
        assert lhs == rhs


def test_grassmannian_budget():
    with pytest.raises(BudgetExceeded):
        enumerate_grassmannian(10, 5, 2, budget=1000)


def test_grassmannian_is_sorted_and_distinct():
    G = enumerate_grassmannian(5, 2, 2)
    assert list(G) == sorted(G)
    assert len(set(G)) == len(G)


vec3 = st.lists(st.integers(0, 2), min_size=4, max_size=4)


@settings(max_examples=60)
@given(st.lists(vec3, min_size=0, max_size=4))
def test_canonicalize_idempotent_and_matches_span(rows):
    S = canonicalize(rows, 3, 4)
    assert canonicalize(S.basis(), 3, 4) == S
    assert as_set(S) == oracles.span([tuple(r) for r in rows], 3, 4)


@settings(max_examples=60)
@given(st.lists(vec3, min_size=1, max_size=3), st.lists(vec3, min_size=1, max_size=3))
def test_meet_join_against_sets(a, b):
    A, B = canonicalize(a, 3, 4), canonicalize(b, 3, 4)
    I, S, (di, ds) = meet_join(A, B)
    sa, sb = as_set(A), as_set(B)
    assert as_set(I) == sa & sb
    assert as_set(S) == {tuple((x + y) % 3 for x, y in zip(u, v)) for u in sa for v in sb}
    assert A.dim + B.dim == di + ds
    assert S.contains(A) and S.contains(B) and A.contains(I)


@settings(max_examples=40)
@given(st.lists(st.integers(0, 31), min_size=1, max_size=4), st.integers(0, 31))
def test_contains_vector_binary(rows, v):
    S = Subspace.span(rows, 2, 5)
    assert S.contains_vector(v) == (unpack(v, 2, 5) in as_set(S))


def test_literal_roundtrip():
    S = Subspace.parse("1000;0110", 2, 4)
    assert S.literal() == "1000;0110"
    assert Subspace.parse(S.literal(), 2) == S
    Z = Subspace.zero(2, 4)
    assert Z.literal() == "{}"
    assert Subspace.parse("{}", 2, 4) == Z


@pytest.mark.parametrize("text,q", [("1020", 2), ("10;011", 2), ("10;10", 2), ("1x0", 3)])
def test_literal_errors(text, q):
    with pytest.raises(FormatError):
        Subspace.parse(text, q)


def test_zero_literal_needs_n():
    with pytest.raises(FormatError):
        Subspace.parse("{}", 2)


def test_literal_is_canonical():
    assert Subspace.parse("0110;1110", 2).literal() == "1000;0110"


def test_ambient_mismatch():
    with pytest.raises(DimensionError):
        Subspace.full(2, 3).join(Subspace.full(2, 4))


@pytest.mark.parametrize("r,s,q", [(1, 2, 2), (1, 3, 2), (2, 3, 2), (2, 4, 2), (1, 2, 3), (2, 3, 3)])
def test_red_profiles(r, s, q):
    P = enumerate_red_profiles(r, s, q)
    assert len(P) == gaussian_binomial(s, r, q)
    for Pi in P:
        assert len(Pi) == r and all(len(row) == s for row in Pi)
        assert Subspace.span(Pi, q, s).dim == r
        assert canonicalize(Pi, q, s).basis() == list(Pi)


def test_red_profiles_reject_r_gt_s():
    with pytest.raises(DimensionError):
        enumerate_red_profiles(3, 2, 2)


@pytest.mark.parametrize("q,n,s,r", [(2, 5, 3, 1), (2, 5, 3, 2), (3, 4, 2, 1), (3, 4, 3, 2)])
def test_r_subspaces_match_oracle(q, n, s, r):
    rng = random.Random(q * 100 + n * 10 + s)
    S = random_subspace(n, s, q, rng)
    ours = {as_set(R) for R in r_subspaces_of(S, r)}
    assert ours == oracles.subspaces_in(as_set(S), r, q, n)


@pytest.mark.parametrize("q,n,r,s", [(2, 4, 1, 2), (2, 5, 2, 3), (3, 3, 1, 2)])
def test_extensions_match_oracle(q, n, r, s):
    R = random_subspace(n, r, q, random.Random(5))
    ours = {as_set(S) for S in extensions(R, s)}
    want = {S for S in oracles.grassmannian(n, s, q) if as_set(R) <= S}
    assert ours == want
    assert len(ours) == gaussian_binomial(n - r, s - r, q)


def test_random_subspace_dimension_and_determinism():
    a = random_subspace(6, 3, 2, random.Random(11))
    b = random_subspace(6, 3, 2, random.Random(11))
    assert a == b and a.dim == 3


def test_transform_identity_and_projection():
    S = Subspace.parse("1010;0111", 2)
    I = [[int(i == j) for j in range(4)] for i in range(4)]
    assert S.transform(I) == S
    P = [[1, 0, 0, 0], [0, 1, 0, 0]]
    assert S.transform(P) == Subspace.full(2, 2)


def test_span_dim_over_L():
    t = build_tower(2, 1, 2, 2)
    iota = sample_injection(t, 4, random.Random(3))
    # the image of L itself is an F_q-plane that is one L-line
    L_line = image_subspace(iota, [t.emb_LK[a] for a in range(4)])
    assert L_line.dim == 2
    assert span_dim_over_L(L_line, iota) == 1
    two = image_subspace(iota, [1, t.alpha])
    assert span_dim_over_L(two, iota) == 2
    iota5 = sample_injection(t, 5, random.Random(4))
    outside = next(S for S in enumerate_grassmannian(5, 1, 2)
                   if iota5.inverse(S.basis()[0]) is None)
    assert span_dim_over_L(outside, iota5) is None
