"""Signed multi-q-systems: sparse integer vectors indexed by k-subspaces.

Also houses the boundary operator, codegree profiles, q-extension counting
and the two exhaustive pattern checks (typicality and boundedness with
respect to a host system).
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Optional, Sequence

from .errors import BudgetExceeded, DimensionError, FormatError
from .fields import gf
from .subspace import (Subspace, enumerate_grassmannian, gaussian_binomial, pack,
                       r_subspaces_of, unpack)

#: Default limit on the number of extension maps enumerated by one check.
EXTENSION_BUDGET = 2_000_000


class SignedQSystem:
    """Element of Z^{Gr_q(n,k)} stored as {Subspace: nonzero int}."""

    __slots__ = ("q", "n", "k", "_d")

    def __init__(self, q: int, n: int, k: int, entries: Optional[Mapping[Subspace, int]] = None):
        self.q, self.n, self.k = q, n, k
        self._d: dict[Subspace, int] = {}
        if entries:
            for S, c in entries.items():
                self.add_to(S, c)

    # -- construction ----------------------------------------------------------
    @classmethod
    def from_subspaces(cls, spaces: Iterable[Subspace], q: int, n: int, k: int, coeff: int = 1):
        out = cls(q, n, k)
        for S in spaces:
            out.add_to(S, coeff)
        return out

    @classmethod
    def constant(cls, q: int, n: int, k: int, value: int = 1):
        """value times the full Grassmannian Gr_q(n, k)."""
        out = cls(q, n, k)
        if value:
            out._d = {S: value for S in enumerate_grassmannian(n, k, q)}
        return out

    @classmethod
    def unit(cls, S: Subspace, coeff: int = 1):
        return cls(S.q, S.n, S.dim, {S: coeff})

    def copy(self) -> "SignedQSystem":
        out = SignedQSystem(self.q, self.n, self.k)
        out._d = dict(self._d)
        return out

    # -- mapping interface -----------------------------------------------------
    def add_to(self, S: Subspace, c: int) -> None:
        if (S.q, S.n, S.dim) != (self.q, self.n, self.k):
            raise DimensionError(f"{S} is not a {self.k}-space of F_{self.q}^{self.n}")
        if not c:
            return
        v = self._d.get(S, 0) + c
        if v:
            self._d[S] = v
        else:
            del self._d[S]

    def __getitem__(self, S: Subspace) -> int:
        return self._d.get(S, 0)

    def __contains__(self, S) -> bool:
        return S in self._d

    def __len__(self) -> int:
        return len(self._d)

    def __iter__(self) -> Iterator[Subspace]:
        return iter(sorted(self._d))

    def items(self) -> list[tuple[Subspace, int]]:
        return sorted(self._d.items())

    def support(self) -> list[Subspace]:
        return sorted(self._d)

    def is_zero(self) -> bool:
        return not self._d

    def __eq__(self, other):
        if not isinstance(other, SignedQSystem):
            return NotImplemented
        return (self.q, self.n, self.k) == (other.q, other.n, other.k) and self._d == other._d

    def __repr__(self):
        return f"SignedQSystem(q={self.q}, n={self.n}, k={self.k}, terms={len(self._d)})"

    # -- arithmetic --------------------------------------------------------------
    def _same(self, other: "SignedQSystem"):
        if (self.q, self.n, self.k) != (other.q, other.n, other.k):
            raise DimensionError("q-systems of different shape")

    def __add__(self, other: "SignedQSystem") -> "SignedQSystem":
        self._same(other)
        out = self.copy()
        for S, c in other._d.items():
            out.add_to(S, c)
        return out

    def __sub__(self, other: "SignedQSystem") -> "SignedQSystem":
        return self + (-other)

    def __neg__(self) -> "SignedQSystem":
        return self.scale(-1)

    def scale(self, a: int) -> "SignedQSystem":
        out = SignedQSystem(self.q, self.n, self.k)
        if a:
            out._d = {S: a * c for S, c in self._d.items()}
        return out

    __rmul__ = scale

    def positive_part(self) -> "SignedQSystem":
        out = SignedQSystem(self.q, self.n, self.k)
        out._d = {S: c for S, c in self._d.items() if c > 0}
        return out

    def negative_part(self) -> "SignedQSystem":
        out = SignedQSystem(self.q, self.n, self.k)
        out._d = {S: c for S, c in self._d.items() if c < 0}
        return out

    def abs(self) -> "SignedQSystem":
        out = SignedQSystem(self.q, self.n, self.k)
        out._d = {S: abs(c) for S, c in self._d.items()}
        return out

    def max_abs(self) -> int:
        return max((abs(c) for c in self._d.values()), default=0)

    def total(self) -> int:
        return sum(self._d.values())

    def density(self) -> Fraction:
        """|supp| / [n k]_q for the positive support."""
        pos = sum(1 for c in self._d.values() if c > 0)
        return Fraction(pos, gaussian_binomial(self.n, self.k, self.q))

    # -- serialization ---------------------------------------------------------
    def serialize(self) -> str:
        lines = [f"qsystem q={self.q} n={self.n} k={self.k}"]
        for S, c in self.items():
            lines.append(f"{c} {S.literal()}")
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str) -> "SignedQSystem":
        lines = text.splitlines()
        if not lines:
            raise FormatError("line 1: empty input")
        head = lines[0].split()
        try:
            if head[0] != "qsystem":
                raise ValueError
            kv = dict(tok.split("=") for tok in head[1:])
            q, n, k = int(kv["q"]), int(kv["n"]), int(kv["k"])
        except (ValueError, KeyError, IndexError):
            raise FormatError(f"line 1: bad header {lines[0]!r}") from None
        out = cls(q, n, k)
        for lineno, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 2:
                raise FormatError(f"line {lineno}: expected '<int> <subspace>'")
            try:
                c = int(parts[0])
                S = Subspace.parse(parts[1], q, n)
            except (ValueError, FormatError) as exc:
                raise FormatError(f"line {lineno}: {exc}") from None
            if S.dim != k:
                raise FormatError(f"line {lineno}: subspace has dimension {S.dim}, expected {k}")
            if c == 0:
                raise FormatError(f"line {lineno}: zero coefficient")
            if S in out._d:
                raise FormatError(f"line {lineno}: repeated subspace {parts[1]}")
            out._d[S] = c
        return out


def serialize(Phi: SignedQSystem) -> str:
    return Phi.serialize()


def parse(text: str) -> SignedQSystem:
    return SignedQSystem.parse(text)


def boundary(Phi: SignedQSystem, r: int) -> SignedQSystem:
    """The boundary map sending e_S to the sum of e_R over r-spaces R <= S."""
    if r > Phi.k or r < 0:
        raise DimensionError(f"cannot take the boundary from dimension {Phi.k} to {r}")
    acc: dict[Subspace, int] = defaultdict(int)
    for S, c in Phi._d.items():
        for R in r_subspaces_of(S, r):
            acc[R] += c
    out = SignedQSystem(Phi.q, Phi.n, r)
    out._d = {R: c for R, c in acc.items() if c}
    return out


def codegree_profile(J: SignedQSystem) -> tuple[int, int]:
    """Largest total |J+| and |J-| over r-spaces through one (r-1)-space."""
    if J.k < 1:
        raise DimensionError("codegree needs r >= 1")
    pos: dict[Subspace, int] = defaultdict(int)
    neg: dict[Subspace, int] = defaultdict(int)
    for R, c in J._d.items():
        target = pos if c > 0 else neg
        for Q in r_subspaces_of(R, J.k - 1):
            target[Q] += abs(c)
    return max(pos.values(), default=0), max(neg.values(), default=0)


def is_bounded(J: SignedQSystem, theta: Fraction) -> bool:
    a, b = codegree_profile(J)
    bound = Fraction(theta) * J.q ** J.n
    return a <= bound and b <= bound


# -- q-extensions -----------------------------------------------------------------

@dataclass(frozen=True)
class QExtension:
    """Pattern H (r-spaces of F_q^t), base F = span(e_1..e_f), base map phi.

    ``phi`` lists the images of e_1, ..., e_f as packed vectors of F_q^n.
    """

    q: int
    n: int
    t: int
    f: int
    H: tuple[Subspace, ...]
    phi: tuple[int, ...]

    def __post_init__(self):
        if len(self.phi) != self.f or self.f > self.t:
            raise DimensionError("phi must give one image per basis vector of F")
        if Subspace.span(self.phi, self.q, self.n).dim != self.f:
            raise DimensionError("phi is not injective")
        for R in self.H:
            if (R.q, R.n) != (self.q, self.t):
                raise DimensionError("pattern spaces must live in F_q^t")

    @property
    def F(self) -> Subspace:
        return Subspace.coordinate(self.q, self.t, self.f)

    @property
    def outside(self) -> tuple[Subspace, ...]:
        F = self.F
        return tuple(R for R in self.H if not F.contains(R))

    @property
    def e(self) -> int:
        return len(self.outside)

    @property
    def v(self) -> int:
        return self.t - self.f


def _combine(q: int, coeffs: Sequence[int], images: Sequence[int], n: int) -> int:
    if q == 2:
        v = 0
        for c, u in zip(coeffs, images):
            if c:
                v ^= u
        return v
    F = gf(q)
    acc = [0] * n
    for c, u in zip(coeffs, images):
        if c:
            uu = unpack(u, q, n)
            acc = [F.add(a, F.mul(c, b)) for a, b in zip(acc, uu)]
    return pack(acc, q)


def _image(R: Subspace, images: Sequence[int], q: int, n: int) -> Subspace:
    return Subspace.span([_combine(q, v, images, n) for v in R.basis()], q, n)


def _completions(q: int, n: int, base: Sequence[int], extra: int, budget: int) -> Iterator[tuple[int, ...]]:
    """Ordered tuples of `extra` vectors extending the independent `base`."""
    total = 1
    f = len(base)
    for i in range(extra):
        total *= q ** n - q ** (f + i)
    if total > budget:
        raise BudgetExceeded(f"{total} extension maps exceed the budget {budget}")

    def rec(cur: list[int], span: Subspace):
        if len(cur) == f + extra:
            yield tuple(cur)
            return
        for u in range(q ** n):
            if not span.contains_vector(u):
                yield from rec(cur + [u], span.join(Subspace(q, n, (u,)) if q == 2 else Subspace.span([u], q, n)))
    yield from rec(list(base), Subspace.span(base, q, n))


def count_extensions(E: QExtension, G: SignedQSystem, budget: int = EXTENSION_BUDGET) -> int:
    """Number of injective extensions of phi embedding H into G + phi(H[F])."""
    if (G.q, G.n) != (E.q, E.n):
        raise DimensionError("extension and host live in different spaces")
    out = E.outside
    if out and any(R.dim != G.k for R in out):
        raise DimensionError("pattern dimension differs from the host dimension")
    count = 0
    for images in _completions(E.q, E.n, E.phi, E.v, budget):
        if all(G[_image(R, images, E.q, E.n)] > 0 for R in out):
            count += 1
    return count


def _superset_sums(vals: list, bits: int) -> list:
    vals = list(vals)
    for b in range(bits):
        bit = 1 << b
        for mask in range(1 << bits):
            if not mask & bit:
                vals[mask] += vals[mask | bit]
    return vals


def _frames(q: int, n: int, f: int) -> Iterator[tuple[int, ...]]:
    """All ordered injective images of e_1..e_f."""
    yield from _completions(q, n, (), f, budget=10 ** 12)


@dataclass
class PatternResult:
    passed: bool
    worst_deviation: Optional[Fraction]
    worst: Optional[dict]
    classes_checked: int


def _pattern_sweep(G: SignedQSystem, h: int, budget: int, weights: Optional[SignedQSystem] = None):
    """Yield (t, f, phi, pattern_spaces, counts) for every base frame.

    ``counts[mask]`` is the number of completions whose embedded pattern set
    contains the spaces in ``mask``.  With ``weights`` given, yields instead a
    dict mapping a designated pattern index to per-mask weighted sums of
    |weights| at the designated image.
    """
    q, n, r = G.q, G.n, G.k
    total = 0
    for t in range(1, h + 1):
        if t > n:
            break
        for f in range(0, t):
            F = Subspace.coordinate(q, t, f)
            pat = [R for R in enumerate_grassmannian(t, r, q) if not F.contains(R)]
            P = len(pat)
            if P > 20:
                raise BudgetExceeded(f"pattern universe of size {P} too large")
            for phi in _frames(q, n, f):
                counts = [0] * (1 << P)
                wsum = [[0] * (1 << P) for _ in range(P)] if weights is not None else None
                for images in _completions(q, n, phi, t - f, budget):
                    total += 1
                    if total > budget:
                        raise BudgetExceeded(f"more than {budget} extension maps")
                    mask = 0
                    imgs = []
                    for i, R in enumerate(pat):
                        Ri = _image(R, images, q, n)
                        imgs.append(Ri)
                        if G[Ri] > 0:
                            mask |= 1 << i
                    counts[mask] += 1
                    if wsum is not None:
                        for i, Ri in enumerate(imgs):
                            w = abs(weights[Ri])
                            if w:
                                wsum[i][mask] += w
                yield t, f, phi, pat, counts, wsum


def typicality_check(G: SignedQSystem, c: Fraction, h: int, budget: int = EXTENSION_BUDGET) -> PatternResult:
    """Exhaustive (c, h)-typicality test returning the worst extension.

    A host of density zero is reported as failing: the definition only
    constrains hosts with positive density in a meaningful way.
    """
    c = Fraction(c)
    q, n = G.q, G.n
    d = G.density()
    if d == 0:
        return PatternResult(False, None, {"reason": "host has density 0"}, 0)
    worst_dev, worst = Fraction(-1), None
    classes = 0
    for t, f, phi, pat, counts, _ in _pattern_sweep(G, h, budget):
        P = len(pat)
        sup = _superset_sums(counts, P)
        v = t - f
        for mask in range(1 << P):
            e = bin(mask).count("1")
            expected = d ** e * q ** (v * n)
            dev = abs(Fraction(sup[mask]) / expected - 1)
            classes += 1
            if dev > worst_dev:
                worst_dev = dev
                worst = {"t": t, "f": f, "phi": list(phi),
                         "H": [pat[i].literal() for i in range(P) if mask >> i & 1],
                         "count": sup[mask], "expected": str(expected)}
    return PatternResult(worst_dev <= c, worst_dev, worst, classes)


def bounded_wrt(J: SignedQSystem, L_host: SignedQSystem, theta: Fraction, h: int,
                budget: int = EXTENSION_BUDGET) -> PatternResult:
    """Exhaustive check that J is (theta, h)-bounded with respect to L_host."""
    theta = Fraction(theta)
    if (J.q, J.n, J.k) != (L_host.q, L_host.n, L_host.k):
        raise DimensionError("J and the host must have the same shape")
    q, n = J.q, J.n
    d = L_host.density()
    worst_ratio, worst = Fraction(0), None
    classes = 0
    if J.is_zero():
        return PatternResult(True, Fraction(0), None, 0)
    for t, f, phi, pat, counts, wsum in _pattern_sweep(L_host, h, budget, weights=J):
        P = len(pat)
        v = t - f
        for i in range(P):
            sup = _superset_sums(wsum[i], P)
            for mask in range(1 << P):
                if mask >> i & 1:
                    continue
                e = bin(mask).count("1")
                X = sup[mask]
                classes += 1
                expected = d ** e * q ** (v * n)
                ratio = Fraction(X) / expected if expected else Fraction(X)
                if worst is None or ratio > worst_ratio:
                    worst_ratio = ratio
                    worst = {"t": t, "f": f, "phi": list(phi), "R": pat[i].literal(),
                             "H": [pat[j].literal() for j in range(P) if mask >> j & 1],
                             "X": X, "bound": str(theta * expected)}
                if X > theta * expected:
                    return PatternResult(False, worst_ratio, worst, classes)
    return PatternResult(True, worst_ratio, worst, classes)
