"""Subspaces of F_q^n in canonical reduced row echelon form.

A vector of F_q^n is packed into one int with base-q digits, column 0 being
the most significant digit.  For q = 2 this is a bitmask and elimination uses
XOR on whole rows.  A ``Subspace`` stores its RREF rows as a tuple of packed
ints, which doubles as its hash and sort key.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional, Sequence

from . import linalg
from .errors import BudgetExceeded, DimensionError, FormatError
from .fields import GF, FieldTower, LinearInjection, gf

#: Largest Grassmannian ``enumerate_grassmannian`` will materialize.
GRASSMANNIAN_BUDGET = 1_000_000

_DIGITS = "0123456789abcdefghijklmnopqrstuvwxyz"


def gaussian_binomial(n: int, k: int, q: int) -> int:
    """Number of k-dimensional subspaces of F_q^n."""
    if k < 0 or k > n:
        return 0
    num = den = 1
    for i in range(k):
        num *= q ** (n - i) - 1
        den *= q ** (i + 1) - 1
    return num // den


def pack(vec: Sequence[int], q: int) -> int:
    x = 0
    for d in vec:
        x = x * q + d
    return x


def unpack(x: int, q: int, n: int) -> tuple[int, ...]:
    if q == 2:
        return tuple((x >> (n - 1 - i)) & 1 for i in range(n))
    out = [0] * n
    for i in range(n - 1, -1, -1):
        x, out[i] = divmod(x, q)
    return tuple(out)


def _rref_bits(rows: Iterable[int]) -> tuple[int, ...]:
    basis: dict[int, int] = {}
    for v in rows:
        for p in sorted(basis, reverse=True):
            if (v >> p) & 1:
                v ^= basis[p]
        if v:
            hb = v.bit_length() - 1
            for p, b in basis.items():
                if (b >> hb) & 1:
                    basis[p] = b ^ v
            basis[hb] = v
    return tuple(basis[p] for p in sorted(basis, reverse=True))


def _rref_packed(rows: Iterable[int], q: int, n: int) -> tuple[int, ...]:
    if q == 2:
        return _rref_bits(rows)
    M = [unpack(r, q, n) for r in rows]
    R, _ = linalg.rref(gf(q), M)
    return tuple(pack(r, q) for r in R)


@dataclass(frozen=True, order=True)
class Subspace:
    """Canonical subspace of F_q^n; ``rows`` are packed RREF rows."""

    q: int
    n: int
    rows: tuple[int, ...]

    # -- construction --------------------------------------------------------
    @staticmethod
    def span(vectors: Iterable[Sequence[int] | int], q: int, n: int) -> "Subspace":
        packed = [v if isinstance(v, int) else pack(v, q) for v in vectors]
        return Subspace(q, n, _rref_packed(packed, q, n))

    @staticmethod
    def zero(q: int, n: int) -> "Subspace":
        return Subspace(q, n, ())

    @staticmethod
    def full(q: int, n: int) -> "Subspace":
        return Subspace(q, n, tuple(q ** (n - 1 - i) for i in range(n)))

    @staticmethod
    def coordinate(q: int, n: int, k: int) -> "Subspace":
        """span(e_1, ..., e_k)."""
        return Subspace(q, n, tuple(q ** (n - 1 - i) for i in range(k)))

    # -- basic data -----------------------------------------------------------
    @property
    def dim(self) -> int:
        return len(self.rows)

    @property
    def field(self) -> GF:
        return gf(self.q)

    def basis(self) -> list[tuple[int, ...]]:
        return [unpack(r, self.q, self.n) for r in self.rows]

    def pivots(self) -> list[int]:
        out = []
        for v in self.basis():
            out.append(next(i for i, d in enumerate(v) if d))
        return out

    def vectors(self) -> list[int]:
        """All q^dim packed vectors of the subspace."""
        if self.q == 2:
            vecs = [0]
            for r in self.rows:
                vecs += [v ^ r for v in vecs]
            return vecs
        F = self.field
        basis = self.basis()
        out = []
        for coeffs in itertools.product(range(self.q), repeat=self.dim):
            v = [0] * self.n
            for c, b in zip(coeffs, basis):
                if c:
                    v = [F.add(x, F.mul(c, y)) for x, y in zip(v, b)]
            out.append(pack(v, self.q))
        return out

    def contains_vector(self, v: Sequence[int] | int) -> bool:
        x = v if isinstance(v, int) else pack(v, self.q)
        if self.q == 2:
            for r in self.rows:
                if (x >> (r.bit_length() - 1)) & 1:
                    x ^= r
            return x == 0
        return Subspace.span(list(self.rows) + [x], self.q, self.n).dim == self.dim

    def contains(self, other: "Subspace") -> bool:
        self._compat(other)
        return all(self.contains_vector(r) for r in other.rows)

    def _compat(self, other: "Subspace"):
        if (self.q, self.n) != (other.q, other.n):
            raise DimensionError("subspaces live in different ambient spaces")

    def join(self, other: "Subspace") -> "Subspace":
        self._compat(other)
        return Subspace(self.q, self.n, _rref_packed(self.rows + other.rows, self.q, self.n))

    def meet(self, other: "Subspace") -> "Subspace":
        return meet_join(self, other)[0]

    # -- literals ------------------------------------------------------------
    def literal(self) -> str:
        if not self.rows:
            return "{}"
        return ";".join("".join(_DIGITS[d] for d in v) for v in self.basis())

    @staticmethod
    def parse(text: str, q: int, n: Optional[int] = None) -> "Subspace":
        text = text.strip()
        if text == "{}":
            if n is None:
                raise FormatError("zero subspace literal needs an explicit n")
            return Subspace.zero(q, n)
        rows = []
        for part in text.split(";"):
            try:
                digits = [_DIGITS.index(c) for c in part.lower()]
            except ValueError:
                raise FormatError(f"bad digit in subspace literal {text!r}") from None
            if any(d >= q for d in digits):
                raise FormatError(f"digit out of range for q={q} in {text!r}")
            rows.append(digits)
        lengths = {len(r) for r in rows}
        if len(lengths) != 1 or (n is not None and lengths != {n}):
            raise FormatError(f"inconsistent row lengths in {text!r}")
        n = lengths.pop()
        S = Subspace.span(rows, q, n)
        if S.dim != len(rows):
            raise FormatError(f"rows of {text!r} are dependent")
        return S

    def __str__(self):
        return self.literal()

    def transform(self, M: Sequence[Sequence[int]]) -> "Subspace":
        """Image under x -> M x (M is n' x n over F_q)."""
        F = self.field
        vecs = [linalg.matvec(F, M, v) for v in self.basis()]
        return Subspace.span(vecs, self.q, len(M))


def canonicalize(rows: Iterable[Sequence[int]], q: int, n: Optional[int] = None) -> Subspace:
    rows = [tuple(r) for r in rows]
    if n is None:
        if not rows:
            raise DimensionError("cannot infer n from an empty row list")
        n = len(rows[0])
    return Subspace.span(rows, q, n)


def meet_join(A: Subspace, B: Subspace) -> tuple[Subspace, Subspace, tuple[int, int]]:
    """Intersection and sum by the Zassenhaus algorithm."""
    A._compat(B)
    q, n = A.q, A.n
    shift = q ** n
    rows = [a * shift + a for a in A.rows] + [b * shift for b in B.rows]
    R = _rref_packed(rows, q, 2 * n)
    sum_rows, meet_rows = [], []
    for r in R:
        hi, lo = divmod(r, shift)
        if hi:
            sum_rows.append(hi)
        else:
            meet_rows.append(lo)
    S = Subspace(q, n, tuple(sum_rows))
    I = Subspace(q, n, _rref_packed(meet_rows, q, n))
    return I, S, (I.dim, S.dim)


def _rref_patterns(n: int, k: int, q: int):
    for piv in itertools.combinations(range(n), k):
        free = []
        for i, c in enumerate(piv):
            free.append([j for j in range(c + 1, n) if j not in piv])
        slots = [(i, j) for i, cols in enumerate(free) for j in cols]
        for vals in itertools.product(range(q), repeat=len(slots)):
            M = [[0] * n for _ in range(k)]
            for i, c in enumerate(piv):
                M[i][c] = 1
            for (i, j), v in zip(slots, vals):
                M[i][j] = v
            yield tuple(pack(r, q) for r in M)


@lru_cache(maxsize=64)
def _grassmannian(n: int, k: int, q: int) -> tuple[Subspace, ...]:
    return tuple(sorted(Subspace(q, n, rows) for rows in _rref_patterns(n, k, q)))


def enumerate_grassmannian(n: int, k: int, q: int, budget: int = GRASSMANNIAN_BUDGET) -> tuple[Subspace, ...]:
    """All k-subspaces of F_q^n in lexicographic order of packed RREF rows."""
    if k < 0 or k > n:
        return ()
    size = gaussian_binomial(n, k, q)
    if size > budget:
        raise BudgetExceeded(f"Gr_{q}({n},{k}) has {size} members, budget {budget}")
    return _grassmannian(n, k, q)


@lru_cache(maxsize=64)
def grassmannian_index(n: int, k: int, q: int) -> dict:
    return {S: i for i, S in enumerate(enumerate_grassmannian(n, k, q))}


def enumerate_red_profiles(r: int, s: int, q: int) -> list[tuple[tuple[int, ...], ...]]:
    """The r x s RREF matrices of rank r, as tuples of row tuples."""
    if r > s:
        raise DimensionError(f"r = {r} > s = {s}")
    return [tuple(S.basis()) for S in enumerate_grassmannian(s, r, q)]


def apply_profile(F: GF, Pi, b: Sequence[Sequence[int]]) -> list[list[int]]:
    """Rows of Pi * b where b is a list of s row vectors."""
    return linalg.matmul(F, Pi, b)


@lru_cache(maxsize=200_000)
def r_subspaces_of(S: Subspace, r: int) -> tuple[Subspace, ...]:
    if r > S.dim:
        raise DimensionError(f"r = {r} exceeds dim S = {S.dim}")
    if r == S.dim:
        return (S,)
    out = []
    if S.q == 2:
        for Pi in enumerate_red_profiles(r, S.dim, 2):
            rows = []
            for prow in Pi:
                v = 0
                for c, b in zip(prow, S.rows):
                    if c:
                        v ^= b
                rows.append(v)
            out.append(Subspace(2, S.n, _rref_bits(rows)))
        return tuple(out)
    F = S.field
    basis = S.basis()
    for Pi in enumerate_red_profiles(r, S.dim, S.q):
        out.append(Subspace.span(linalg.matmul(F, Pi, basis), S.q, S.n))
    return tuple(out)


def random_subspace(n: int, k: int, q: int, rng: random.Random) -> Subspace:
    """Uniformly random k-subspace (rejection from random k-tuples)."""
    while True:
        rows = [rng.randrange(q ** n) for _ in range(k)]
        S = Subspace(q, n, _rref_packed(rows, q, n))
        if S.dim == k:
            return S


def extensions(R: Subspace, s: int) -> list[Subspace]:
    """All s-subspaces of F_q^n containing R (via the quotient space)."""
    q, n, r = R.q, R.n, R.dim
    if s < r:
        return []
    # complement coordinates: non-pivot columns of R
    piv = set(R.pivots())
    comp = [j for j in range(n) if j not in piv]
    out = []
    for T in enumerate_grassmannian(n - r, s - r, q):
        rows = list(R.rows)
        for v in T.basis():
            w = [0] * n
            for c, d in zip(comp, v):
                w[c] = d
            rows.append(pack(w, q))
        out.append(Subspace(q, n, _rref_packed(rows, q, n)))
    return out


# -- L-structure through an injection ------------------------------------------

def L_rank(tower: FieldTower, xs: Sequence[int]) -> int:
    """dim_L of the L-span of K-elements xs."""
    M = [list(tower.L_coords(x)) for x in xs]
    return linalg.rank(tower.L, M) if M else 0


def span_dim_over_L(S: Subspace, iota: LinearInjection) -> Optional[int]:
    """dim_L span_L(iota^{-1}(S)), or None when S is not inside the image."""
    pre = []
    for v in S.basis():
        x = iota.inverse(v)
        if x is None:
            return None
        pre.append(x)
    return L_rank(iota.tower, pre)


def preimage(S: Subspace, iota: LinearInjection) -> Optional[list[int]]:
    out = []
    for v in S.basis():
        x = iota.inverse(v)
        if x is None:
            return None
        out.append(x)
    return out


def image_subspace(iota: LinearInjection, xs: Iterable[int]) -> Subspace:
    """F_q-span of iota(x) for the K-elements xs."""
    return Subspace.span([iota(x) for x in xs], iota.tower.q, iota.n)
