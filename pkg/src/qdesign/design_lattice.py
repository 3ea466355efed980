"""The integer lattice spanned by boundaries of s-spaces.

Contents: divisibility conditions, the r-vs-s inclusion matrix on an
(r+s)-space and its determinant, exact local decoding of a single r-space,
Smith normal form membership with preimages or certificates, flattening
modulo Delta, the greedy sparse basis and Delta-multiple decoding.

Every routine that returns a decomposition checks its boundary identity
before returning and raises ``VerificationError`` if it fails.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence

from . import linalg
from .errors import BudgetExceeded, DimensionError, NotInLattice, VerificationError
from .fields import gf
from .qsystem import SignedQSystem, boundary, codegree_profile
from .subspace import (Subspace, enumerate_grassmannian, gaussian_binomial, grassmannian_index,
                       meet_join, r_subspaces_of, unpack)

KANTOR_BUDGET = 2000
SNF_BUDGET = 200_000  # rows * cols of the boundary matrix


def check_boundary(Phi: SignedQSystem, r: int, target: SignedQSystem, what: str) -> None:
    """Raise VerificationError unless the boundary of Phi equals target."""
    got = boundary(Phi, r)
    if got != target:
        diff = got - target
        witness = diff.items()[0] if not diff.is_zero() else None
        raise VerificationError(f"{what}: boundary identity fails at {witness}")


# -- divisibility -------------------------------------------------------------

def divisibility_check(n: int, s: int, r: int, lam: int, q: int) -> tuple[bool, list[int]]:
    """Check [s-i, r-i]_q | lam [n-i, r-i]_q for 0 <= i < r."""
    if not (n >= s > r >= 1) or lam < 1:
        raise DimensionError("need n >= s > r >= 1 and lambda >= 1")
    failing = [i for i in range(r)
               if (lam * gaussian_binomial(n - i, r - i, q)) % gaussian_binomial(s - i, r - i, q)]
    return not failing, failing


# -- exact integer linear algebra ----------------------------------------------

def bareiss_det(M: Sequence[Sequence[int]]) -> int:
    """Exact determinant by fraction-free elimination."""
    A = [list(r) for r in M]
    n = len(A)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if A[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if A[i][k]), None)
            if swap is None:
                return 0
            A[k], A[swap] = A[swap], A[k]
            sign = -sign
        akk = A[k][k]
        rowk = A[k]
        for i in range(k + 1, n):
            aik = A[i][k]
            rowi = A[i]
            for j in range(k + 1, n):
                rowi[j] = (rowi[j] * akk - aik * rowk[j]) // prev
            rowi[k] = 0
        prev = akk
    return sign * A[n - 1][n - 1]


def solve_rational(A: Sequence[Sequence[int]], b: Sequence[int]) -> Optional[list[Fraction]]:
    """Unique solution of a square nonsingular system over Q, else None."""
    n = len(A)
    M = [[Fraction(x) for x in row] + [Fraction(bi)] for row, bi in zip(A, b)]
    for c in range(n):
        piv = next((i for i in range(c, n) if M[i][c]), None)
        if piv is None:
            return None
        M[c], M[piv] = M[piv], M[c]
        inv = 1 / M[c][c]
        M[c] = [x * inv for x in M[c]]
        for i in range(n):
            if i != c and M[i][c]:
                f = M[i][c]
                M[i] = [x - f * y for x, y in zip(M[i], M[c])]
    return [M[i][n] for i in range(n)]


@dataclass
class SmithForm:
    """D = U A V with U, V unimodular; diag holds the nonzero invariants."""

    U: list[list[int]]
    V: list[list[int]]
    diag: list[int]
    rows: int
    cols: int


def smith_normal_form(A: Sequence[Sequence[int]]) -> SmithForm:
    m = len(A)
    n = len(A[0]) if m else 0
    M = [list(r) for r in A]
    U = [[int(i == j) for j in range(m)] for i in range(m)]
    V = [[int(i == j) for j in range(n)] for i in range(n)]

    def row_comb(i, j, a, b, c, d):
        # (row_i, row_j) <- (a row_i + b row_j, c row_i + d row_j)
        for X in (M, U):
            ri, rj = X[i], X[j]
            X[i] = [a * x + b * y for x, y in zip(ri, rj)]
            X[j] = [c * x + d * y for x, y in zip(ri, rj)]

    def col_comb(i, j, a, b, c, d):
        for X in (M, V):
            for row in X:
                x, y = row[i], row[j]
                row[i] = a * x + b * y
                row[j] = c * x + d * y

    def egcd(a, b):
        x0, y0, x1, y1 = 1, 0, 0, 1
        while b:
            qq, a, b = a // b, b, a % b
            x0, x1 = x1, x0 - qq * x1
            y0, y1 = y1, y0 - qq * y1
        return a, x0, y0

    diag = []
    t = 0
    while t < min(m, n):
        # choose the smallest nonzero entry of the trailing block as pivot
        best = None
        for i in range(t, m):
            for j in range(t, n):
                v = M[i][j]
                if v and (best is None or abs(v) < best[0]):
                    best = (abs(v), i, j)
                    if best[0] == 1:
                        break
            if best and best[0] == 1:
                break
        if best is None:
            break
        _, i, j = best
        if i != t:
            row_comb(t, i, 0, 1, 1, 0)
        if j != t:
            col_comb(t, j, 0, 1, 1, 0)
        while True:
            changed = False
            for i in range(t + 1, m):
                a = M[i][t]
                if a:
                    p = M[t][t]
                    if a % p == 0:
                        f = a // p
                        row_comb(t, i, 1, 0, -f, 1)
                    else:
                        g, x, y = egcd(p, a)
                        row_comb(t, i, x, y, -a // g, p // g)
                        changed = True
            for j in range(t + 1, n):
                a = M[t][j]
                if a:
                    p = M[t][t]
                    if a % p == 0:
                        f = a // p
                        col_comb(t, j, 1, 0, -f, 1)
                    else:
                        g, x, y = egcd(p, a)
                        col_comb(t, j, x, y, -a // g, p // g)
                        changed = True
            if changed or any(M[i][t] for i in range(t + 1, m)):
                continue
            p = M[t][t]
            bad = None
            for i in range(t + 1, m):
                if any(M[i][j] % p for j in range(t + 1, n)):
                    bad = i
                    break
            if bad is None:
                break
            row_comb(t, bad, 1, 1, 0, 1)
        if M[t][t] < 0:
            M[t] = [-x for x in M[t]]
            U[t] = [-x for x in U[t]]
        diag.append(M[t][t])
        t += 1
    return SmithForm(U, V, diag, m, n)


# -- boundary matrices ------------------------------------------------------------

@lru_cache(maxsize=32)
def boundary_matrix(q: int, n: int, s: int, r: int) -> tuple[tuple[int, ...], ...]:
    """Rows indexed by Gr(n, r), columns by Gr(n, s); entry 1 iff R <= S."""
    Rs = enumerate_grassmannian(n, r, q)
    Ss = enumerate_grassmannian(n, s, q)
    idx = grassmannian_index(n, r, q)
    M = [[0] * len(Ss) for _ in Rs]
    for j, S in enumerate(Ss):
        for R in r_subspaces_of(S, r):
            M[idx[R]][j] = 1
    return tuple(tuple(row) for row in M)


@dataclass
class InclusionMatrix:
    q: int
    r: int
    s: int
    rows: tuple[Subspace, ...]
    cols: tuple[Subspace, ...]
    A: tuple[tuple[int, ...], ...]


@lru_cache(maxsize=16)
def kantor(q: int, r: int, s: int) -> tuple[InclusionMatrix, int]:
    """Inclusion matrix of r- into s-spaces of F_q^{r+s} and Delta = |det A|."""
    if not s > r >= 1:
        raise DimensionError("need s > r >= 1")
    side = gaussian_binomial(r + s, r, q)
    if side > KANTOR_BUDGET:
        raise BudgetExceeded(f"inclusion matrix side {side} exceeds {KANTOR_BUDGET}")
    A = boundary_matrix(q, r + s, s, r)
    M = InclusionMatrix(q, r, s, enumerate_grassmannian(r + s, r, q),
                        enumerate_grassmannian(r + s, s, q), A)
    delta = abs(bareiss_det(A))
    if delta == 0:
        raise VerificationError("inclusion matrix is singular")  # pragma: no cover
    return M, delta


@dataclass
class DecodeGadget:
    q: int
    r: int
    s: int
    R0: Subspace
    T0: Subspace
    coeffs: dict  # Subspace (s-space of F_q^{r+s}) -> int
    delta: int

    def as_qsystem(self) -> SignedQSystem:
        return SignedQSystem(self.q, self.r + self.s, self.s, self.coeffs)

    def target(self) -> SignedQSystem:
        return SignedQSystem.unit(self.R0, self.delta)

    def verify(self) -> None:
        check_boundary(self.as_qsystem(), self.r, self.target(), "local decoding")

    def transport(self, M: Sequence[Sequence[int]]) -> SignedQSystem:
        """Image of the gadget under the injective map x -> M x into F_q^{rows(M)}."""
        out = SignedQSystem(self.q, len(M), self.s)
        for S, c in self.coeffs.items():
            out.add_to(S.transform(M), c)
        return out


@lru_cache(maxsize=16)
def _local_decode(q: int, r: int, s: int) -> DecodeGadget:
    M, delta = kantor(q, r, s)
    R0 = Subspace.coordinate(q, r + s, r)
    i0 = M.rows.index(R0)
    b = [delta if i == i0 else 0 for i in range(len(M.rows))]
    sol = solve_rational(M.A, b)
    if sol is None or any(x.denominator != 1 for x in sol):
        raise VerificationError("Cramer solution is not integral")  # pragma: no cover
    coeffs = {S: int(x) for S, x in zip(M.cols, sol) if x}
    g = DecodeGadget(q, r, s, R0, Subspace.full(q, r + s), coeffs, delta)
    g.verify()
    return g


def local_decode(q: int, r: int, s: int) -> DecodeGadget:
    """Integer a_S with Delta e_{R0} = sum a_S boundary(e_S) inside F_q^{r+s}."""
    if s <= r:
        raise DimensionError("local decoding needs s > r")
    return _local_decode(q, r, s)


def random_invertible(q: int, k: int, rng: random.Random) -> list[list[int]]:
    F = gf(q)
    while True:
        B = [[rng.randrange(q) for _ in range(k)] for _ in range(k)]
        if linalg.rank(F, B) == k:
            return B


def random_transport(R: Subspace, k: int, rng: random.Random) -> list[list[int]]:
    """Random injective n x k matrix whose first r columns are an ordered basis of R.

    Maps span(e_1..e_r) onto R.
    """
    q, n, r = R.q, R.n, R.dim
    F = gf(q)
    if k > n:
        raise DimensionError(f"cannot embed F_q^{k} into F_q^{n}")
    while True:
        coeffs = [[rng.randrange(q) for _ in range(r)] for _ in range(r)]
        if linalg.rank(F, coeffs) == r:
            break
    basis = R.basis()
    cols = [linalg.vecmat(F, c, basis) for c in coeffs]
    span = Subspace.span(cols, q, n)
    while len(cols) < k:
        v = rng.randrange(q ** n)
        if not span.contains_vector(v):
            cols.append(list(unpack(v, q, n)))
            span = span.join(Subspace.span([v], q, n))
    return linalg.transpose(cols)


@dataclass
class AveragedCoeffs:
    q: int
    r: int
    s: int
    f: list  # Fraction per intersection dimension 0..r

    def weights_for(self, R: Subspace, T: Subspace) -> dict:
        out = {}
        for S in subspaces_within(T, self.s):
            out[S] = self.f[meet_join(S, R)[2][0]]
        return out


def subspaces_within(T: Subspace, k: int) -> list[Subspace]:
    return list(r_subspaces_of(T, k))


def verify_averaged(av: AveragedCoeffs, R: Subspace, T: Subspace) -> bool:
    acc: dict = {}
    for S, w in av.weights_for(R, T).items():
        if w:
            for Rp in r_subspaces_of(S, av.r):
                acc[Rp] = acc.get(Rp, 0) + w
    acc = {k: v for k, v in acc.items() if v}
    return acc == {R: 1}


@lru_cache(maxsize=16)
def averaged_coeffs(q: int, r: int, s: int) -> AveragedCoeffs:
    """Rational f with e_R = sum_{S <= T} f(dim(S cap R)) boundary(e_S)."""
    g = local_decode(q, r, s)
    sums = [Fraction(0)] * (r + 1)
    sizes = [0] * (r + 1)
    for S in enumerate_grassmannian(r + s, s, q):
        j = meet_join(S, g.R0)[2][0]
        sums[j] += g.coeffs.get(S, 0)
        sizes[j] += 1
    f = [sums[j] / (g.delta * sizes[j]) if sizes[j] else Fraction(0) for j in range(r + 1)]
    av = AveragedCoeffs(q, r, s, f)
    if not verify_averaged(av, g.R0, g.T0):
        raise VerificationError("averaged coefficients fail substitution")  # pragma: no cover
    return av


# -- membership -------------------------------------------------------------------

@dataclass
class Membership:
    member: bool
    preimage: Optional[SignedQSystem] = None
    # certificate: integer row y over Gr(n,r) and modulus d (0 means exact)
    certificate: Optional[tuple[list[int], int]] = None
    invariants: list = field(default_factory=list)


@lru_cache(maxsize=16)
def _snf(q: int, n: int, s: int, r: int) -> SmithForm:
    return smith_normal_form(boundary_matrix(q, n, s, r))


def lattice_membership(J: SignedQSystem, s: int) -> Membership:
    """Decide J in boundary(Z^{Gr(n,s)}) exactly via the Smith normal form."""
    q, n, r = J.q, J.n, J.k
    if s < r or s > n:
        raise DimensionError("need r <= s <= n")
    nr, ns = gaussian_binomial(n, r, q), gaussian_binomial(n, s, q)
    if nr * ns > SNF_BUDGET:
        raise BudgetExceeded(f"boundary matrix {nr}x{ns} exceeds the budget")
    snf = _snf(q, n, s, r)
    Rs = enumerate_grassmannian(n, r, q)
    Ss = enumerate_grassmannian(n, s, q)
    j = [J[R] for R in Rs]
    y = [sum(u * x for u, x in zip(row, j) if x) for row in snf.U]
    k = len(snf.diag)
    for i in range(len(y)):
        d = snf.diag[i] if i < k else 0
        bad = (y[i] % d) if d else y[i]
        if bad:
            return Membership(False, certificate=(list(snf.U[i]), d), invariants=list(snf.diag))
    z = [y[i] // snf.diag[i] for i in range(k)] + [0] * (len(Ss) - k)
    x = [sum(v * zz for v, zz in zip(row, z) if zz) for row in snf.V]
    Phi = SignedQSystem(q, n, s, {S: c for S, c in zip(Ss, x) if c})
    check_boundary(Phi, r, J, "lattice preimage")
    return Membership(True, preimage=Phi, invariants=list(snf.diag))


def check_certificate(J: SignedQSystem, s: int, cert: tuple[list[int], int]) -> bool:
    """y . boundary == 0 (mod d) on every s-space while y . J != 0 (mod d)."""
    y, d = cert
    q, n, r = J.q, J.n, J.k
    Rs = enumerate_grassmannian(n, r, q)
    idx = grassmannian_index(n, r, q)

    def red(v):
        return v % d if d else v

    for S in enumerate_grassmannian(n, s, q):
        if red(sum(y[idx[R]] for R in r_subspaces_of(S, r))):
            return False
    return red(sum(y[i] * J[R] for i, R in enumerate(Rs))) != 0


# -- flattening ------------------------------------------------------------------

def flatten(J: SignedQSystem, delta: int) -> tuple[SignedQSystem, SignedQSystem]:
    """Split J = J0 + Jp with J0 = 0 mod delta by rounding toward zero."""
    if delta < 1:
        raise ValueError("delta must be positive")
    J0 = SignedQSystem(J.q, J.n, J.k)
    Jp = SignedQSystem(J.q, J.n, J.k)
    for R, c in J.items():
        a = delta * (abs(c) // delta) * (1 if c > 0 else -1)
        J0.add_to(R, a)
        Jp.add_to(R, c - a)
    return J0, Jp


# -- greedy sparse basis --------------------------------------------------------------

class ModLattice:
    """Echelon basis of span_Z(vectors) + delta Z^m, entries kept mod delta."""

    def __init__(self, m: int, delta: int):
        self.m, self.delta = m, delta
        self.rows: dict[int, list[int]] = {}

    def _pivot(self, c: int) -> int:
        row = self.rows.get(c)
        return row[c] if row is not None else self.delta

    def reduce(self, v: Sequence[int]) -> list[int]:
        d = self.delta
        v = [x % d for x in v]
        for c in range(self.m):
            if v[c] == 0:
                continue
            row = self.rows.get(c)
            p = row[c] if row is not None else d
            if v[c] % p:
                return v
            f = v[c] // p
            if row is not None:
                v = [(x - f * y) % d for x, y in zip(v, row)]
            else:
                v[c] = 0
        return v

    def contains(self, v: Sequence[int]) -> bool:
        return not any(self.reduce(v))

    def add(self, v: Sequence[int]) -> bool:
        """Insert v; returns False if it was already in the lattice."""
        d = self.delta
        grew = False
        pending = [[x % d for x in v]]
        while pending:
            w = pending.pop()
            for c in range(self.m):
                if w[c] == 0:
                    continue
                row = self.rows.get(c)
                p = row[c] if row is not None else d
                if w[c] % p == 0:
                    f = w[c] // p
                    if row is not None:
                        w = [(x - f * y) % d for x, y in zip(w, row)]
                    else:
                        w[c] = 0
                    continue
                # replace the pivot row by one with entry gcd(p, w[c])
                a = w[c]
                g, x, y = _egcd(p, a)
                base = row if row is not None else [d if k == c else 0 for k in range(self.m)]
                new = [(x * u + y * t) % d for u, t in zip(base, w)]
                rem = [((a // g) * u - (p // g) * t) % d for u, t in zip(base, w)]
                self.rows[c] = new
                grew = True
                pending.append(rem)
                # (d/g) * new vanishes at c and must stay in the lattice
                pending.append([((d // g) * t) % d for t in new])
                break
        return grew


def _egcd(a: int, b: int):
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        qq, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - qq * x1
        y0, y1 = y1, y0 - qq * y1
    return a, x0, y0


@dataclass
class SparseBasis:
    S_set: list
    saturated: list
    counts: dict


def greedy_sparse_basis(L_host: SignedQSystem, s: int, delta: int, cap: int,
                        order: Optional[Sequence[Subspace]] = None) -> SparseBasis:
    """Single lexicographic pass adding s-spaces whose boundary is new mod delta.

    Candidates are the s-spaces all of whose r-subspaces lie in L_host.  A
    candidate is skipped when one of its (r-1)-subspaces already lies in
    ``cap`` chosen members.
    """
    q, n, r = L_host.q, L_host.n, L_host.k
    host = set(R for R, c in L_host.items() if c > 0)
    if not host:
        return SparseBasis([], [], {})
    Rs = sorted(host)
    idx = {R: i for i, R in enumerate(Rs)}
    if order is None:
        cands = [S for S in enumerate_grassmannian(n, s, q)
                 if all(R in host for R in r_subspaces_of(S, r))]
    else:
        cands = list(order)
    lat = ModLattice(len(Rs), delta)
    counts: dict[Subspace, int] = {}
    chosen = []
    for S in cands:
        Qs = r_subspaces_of(S, r - 1)
        if any(counts.get(Q, 0) >= cap for Q in Qs):
            continue
        v = [0] * len(Rs)
        for R in r_subspaces_of(S, r):
            v[idx[R]] += 1
        if lat.contains(v):
            continue
        lat.add(v)
        chosen.append(S)
        for Q in Qs:
            counts[Q] = counts.get(Q, 0) + 1
    saturated = sorted(Q for Q, c in counts.items() if c >= cap)
    return SparseBasis(chosen, saturated, counts)


# -- Delta-multiple decoding ------------------------------------------------------

@dataclass
class DeltaDecode:
    Phi: SignedQSystem
    codegree_plus: tuple[int, int]
    codegree_minus: tuple[int, int]
    copies: int


def decode_delta_multiple(J: SignedQSystem, s: int, rng: random.Random) -> DeltaDecode:
    """Phi with boundary(Phi) = J for J divisible by Delta coordinate-wise.

    Each unit copy of Delta e_R is decoded by its own randomly transported
    local gadget.
    """
    q, n, r = J.q, J.n, J.k
    if n < r + s:
        raise DimensionError("need n >= r + s")
    g = local_decode(q, r, s)
    delta = g.delta
    if any(c % delta for _, c in J.items()):
        raise NotInLattice(f"J is not divisible by Delta = {delta}")
    Phi = SignedQSystem(q, n, s)
    copies = 0
    for R, c in J.items():
        sign = 1 if c > 0 else -1
        for _ in range(abs(c) // delta):
            M = random_transport(R, r + s, rng)
            Phi = Phi + g.transport(M).scale(sign)
            copies += 1
    check_boundary(Phi, r, J, "Delta-multiple decoding")
    return DeltaDecode(Phi, codegree_profile(boundary(Phi.positive_part(), r)),
                       codegree_profile(boundary(Phi.negative_part(), r)), copies)
