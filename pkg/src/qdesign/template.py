"""The randomized algebraic template and its field-level bookkeeping.

Every r-space R of V = F_q^n carries a configuration (y_R, i_R, b_R, Pi_R).
An s-space span(iota_i(N x)) with x in K^r of full L-rank is admitted when
all of its r-subspaces agree with that configuration.  Colors are 0-based
internally.
"""
from __future__ import annotations

import hashlib
import itertools
import json
import random
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from . import linalg
from .errors import BudgetExceeded, DimensionError, FieldError, FormatError, VerificationError
from .fields import FieldTower, LinearInjection, build_tower, prime_power, sample_injection
from .gadgets import (GenericityWarning, GenericMatrix, generic_matrix, matrix_from_log,
                      verify_generic)
from .qsystem import SignedQSystem
from .subspace import (L_rank, Subspace, enumerate_grassmannian, enumerate_red_profiles,
                       extensions, preimage, r_subspaces_of)

CANDIDATE_BUDGET = 2_000_000
BASIS_BUDGET = 200_000


def derive_rng(seed: int, label: str) -> random.Random:
    """Independent stream for one stage, derived from a master seed."""
    h = hashlib.sha256(f"{seed}:{label}".encode()).digest()
    return random.Random(int.from_bytes(h[:8], "big"))


def bernoulli(rng: random.Random, p: Fraction) -> int:
    """Exact Ber(p) draw for a rational p."""
    return 1 if rng.randrange(p.denominator) < p.numerator else 0


@dataclass(frozen=True)
class TemplateParams:
    q: int
    n: int
    s: int
    r: int
    ell: int
    m: int
    z: int = 1
    tau: Fraction = Fraction(1)
    d: int = 1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "tau", Fraction(self.tau))
        if not (self.s > self.r >= 1):
            raise DimensionError(f"need s > r >= 1, got s = {self.s}, r = {self.r}")
        if self.n < self.ell * self.m:
            raise DimensionError(f"n = {self.n} < ell*m = {self.ell * self.m}")
        if not (0 < self.tau <= 1):
            raise ValueError(f"tau must lie in (0, 1], got {self.tau}")
        if self.z < 1:
            raise ValueError("z must be positive")

    @property
    def tower(self) -> FieldTower:
        p, e = prime_power(self.q)
        return build_tower(p, e, self.ell, self.m)

    def to_json(self) -> dict:
        return {"q": self.q, "n": self.n, "s": self.s, "r": self.r, "ell": self.ell, "m": self.m,
                "z": self.z, "tau": f"{self.tau.numerator}/{self.tau.denominator}", "d": self.d,
                "seed": self.seed}

    @classmethod
    def from_json(cls, obj: dict) -> "TemplateParams":
        return cls(obj["q"], obj["n"], obj["s"], obj["r"], obj["ell"], obj["m"], obj.get("z", 1),
                   Fraction(str(obj.get("tau", "1"))), obj.get("d", 1), obj.get("seed", 0))


@dataclass
class Config:
    """Sampled configuration of one r-space."""
    y: int
    i: int
    b: tuple        # ordered basis: r vectors of F_q^n
    Pi: tuple       # element of Red_q^{r x s}


@dataclass(frozen=True)
class TemplateBlock:
    S: Subspace
    i: int
    x: tuple        # x in K^r


def template_matrix(tower: FieldTower, s: int, r: int, d: int = 1) -> GenericMatrix:
    """Canonical generic matrix when it passes bullets 1 and 2, else the first
    lexicographic one that does."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GenericityWarning)
        try:
            N = generic_matrix(tower, s, r, d)
            if verify_generic(N, r, s, bullets_to_check=(1, 2)).passed:
                return N
        except FieldError:
            pass
    order = tower.L.order - 1
    for vals in itertools.product([None] + list(range(order)), repeat=s * r):
        N = matrix_from_log(tower, s, r, vals)
        if verify_generic(N, r, s, bullets_to_check=(1, 2)).passed:
            return N
    raise FieldError(f"no {s}x{r} matrix over L = GF({tower.L.order}) passes genericity "
                     f"bullet 1; L is too small")


def full_L_rank_vectors(tower: FieldTower, r: int, budget: int = CANDIDATE_BUDGET):
    """All x in K^r whose coordinates are L-linearly independent."""
    if tower.K.order ** r > budget:
        raise BudgetExceeded(f"|K|^r = {tower.K.order ** r} exceeds the candidate budget")
    for x in itertools.product(range(tower.K.order), repeat=r):
        if L_rank(tower, x) == r:
            yield x


def _apply_iota(iota: LinearInjection, xs: Sequence[int]) -> tuple:
    return tuple(iota(x) for x in xs)


class TemplateState:
    def __init__(self, params: TemplateParams, iotas: Sequence[LinearInjection], N: GenericMatrix,
                 tables: dict):
        self.params = params
        self.tower = params.tower
        self.iotas = list(iotas)
        self.N = N
        self.tables = tables
        self.reds = [tuple(map(tuple, P)) for P in enumerate_red_profiles(params.r, params.s, params.q)]
        self.S_tem: list[TemplateBlock] = []
        self.G_tem = SignedQSystem(params.q, params.n, params.r)
        self.color: dict[Subspace, int] = {}
        self.admit()

    # -- construction -------------------------------------------------------------
    @classmethod
    def from_tables(cls, params, iotas, N, tables) -> "TemplateState":
        return cls(params, iotas, N, tables)

    def _pieces(self, i: int, x: Sequence[int]):
        """(S, [(Pi, R, iota(Pi N x))]) for the candidate (i, x)."""
        K = self.tower.K
        iota = self.iotas[i]
        Nx = linalg.matvec(K, self.N.entries, list(x))
        S = Subspace.span(_apply_iota(iota, Nx), self.params.q, self.params.n)
        parts = []
        for Pi in self.reds:
            PiNx = linalg.matvec(K, [[self.tower.emb_FK[a] for a in row] for row in Pi], Nx)
            img = _apply_iota(iota, PiNx)
            parts.append((Pi, Subspace.span(img, self.params.q, self.params.n), img))
        return S, parts, Nx

    def _admitted(self, i: int, x) -> Optional[Subspace]:
        S, parts, Nx = self._pieces(i, x)
        if S.dim != self.params.s:
            raise VerificationError(f"template ill-defined: span(iota(Nx)) has dim {S.dim} at x = {x}")
        K = self.tower.K
        iota = self.iotas[i]
        for Pi, R, _ in parts:
            if R.dim != self.params.r:
                raise VerificationError(f"template ill-defined: span(iota(Pi N x)) has dim {R.dim}")
            c = self.tables.get(R)
            if c is None or c.i != i or c.y != 1:
                return None
            PiR = [[self.tower.emb_FK[a] for a in row] for row in c.Pi]
            if _apply_iota(iota, linalg.matvec(K, PiR, Nx)) != c.b:
                return None
        return S

    def admit(self) -> None:
        """Recompute S_tem and G_tem from the tables."""
        blocks = []
        for i in range(self.params.z):
            for x in full_L_rank_vectors(self.tower, self.params.r):
                S = self._admitted(i, x)
                if S is not None:
                    blocks.append(TemplateBlock(S, i, tuple(x)))
        self.S_tem = blocks
        G = SignedQSystem(self.params.q, self.params.n, self.params.r)
        color = {}
        for blk in blocks:
            for R in r_subspaces_of(blk.S, self.params.r):
                G.add_to(R, 1)
                color[R] = blk.i
        self.G_tem = G
        self.color = color

    def plant(self, i: int, x: Sequence[int]) -> Subspace:
        """Set the tables so that span(iota_i(N x)) is admitted; returns that s-space."""
        S, parts, _ = self._pieces(i, x)
        for Pi, R, img in parts:
            self.tables[R] = Config(1, i, img, Pi)
        self.admit()
        return S

    # -- views --------------------------------------------------------------------
    def blocks_of_color(self, i: int) -> list[TemplateBlock]:
        return [b for b in self.S_tem if b.i == i]

    def S_tem_set(self, i: Optional[int] = None) -> set:
        return {b.S for b in self.S_tem if i is None or b.i == i}

    def G_color(self, i: int) -> SignedQSystem:
        G = SignedQSystem(self.params.q, self.params.n, self.params.r)
        for R, c in self.color.items():
            if c == i:
                G.add_to(R, 1)
        return G

    def __eq__(self, other):
        return (isinstance(other, TemplateState) and self.params == other.params
                and [io.W for io in self.iotas] == [io.W for io in other.iotas]
                and self.N == other.N and self.tables == other.tables
                and self.S_tem == other.S_tem)

    # -- serialization -------------------------------------------------------------
    def to_text(self) -> str:
        tables = {R.literal(): [c.y, c.i, [list(v) for v in c.b], [list(r) for r in c.Pi]]
                  for R, c in sorted(self.tables.items())}
        obj = {"kind": "template", "params": self.params.to_json(), "tower": self.tower.spec,
               "W": [io.to_json() for io in self.iotas], "N": self.N.to_json(),
               "tables": tables,
               "S_tem": [[b.S.literal(), b.i, list(b.x)] for b in self.S_tem]}
        return json.dumps(obj, sort_keys=True) + "\n" + self.G_tem.serialize()

    @classmethod
    def from_text(cls, text: str) -> "TemplateState":
        head, _, rest = text.partition("\n")
        try:
            obj = json.loads(head)
        except json.JSONDecodeError as exc:
            raise FormatError(f"line 1: bad JSON: {exc}") from None
        if obj.get("kind") != "template":
            raise FormatError("not a template file")
        params = TemplateParams.from_json(obj["params"])
        tower = params.tower
        if tower.spec != obj["tower"]:
            raise FormatError("tower does not match the parameters")
        iotas = [LinearInjection(tower, W) for W in obj["W"]]
        N = GenericMatrix.from_json(tower, obj["N"])
        tables = {}
        for lit, (y, i, b, Pi) in obj["tables"].items():
            R = Subspace.parse(lit, params.q, params.n)
            tables[R] = Config(y, i, tuple(tuple(v) for v in b), tuple(tuple(r) for r in Pi))
        st = cls(params, iotas, N, tables)
        stored = [[b[0], b[1], b[2]] for b in obj["S_tem"]]
        if stored != [[b.S.literal(), b.i, list(b.x)] for b in st.S_tem]:
            raise FormatError("stored template blocks disagree with the stored tables")
        if rest.strip() and SignedQSystem.parse(rest) != st.G_tem:
            raise FormatError("stored G_tem disagrees with the stored tables")
        return st


def random_ordered_basis(R: Subspace, rng: random.Random) -> tuple:
    F = R.field
    basis = R.basis()
    k = len(basis)
    while True:
        M = [[rng.randrange(R.q) for _ in range(k)] for _ in range(k)]
        if linalg.rank(F, M) == k:
            return tuple(tuple(v) for v in linalg.matmul(F, M, basis))


def sample_tables(params: TemplateParams, rng: random.Random) -> dict:
    reds = [tuple(map(tuple, P)) for P in enumerate_red_profiles(params.r, params.s, params.q)]
    tables = {}
    for R in enumerate_grassmannian(params.n, params.r, params.q):
        y = bernoulli(rng, params.tau)
        i = rng.randrange(params.z)
        b = random_ordered_basis(R, rng)
        Pi = reds[rng.randrange(len(reds))]
        tables[R] = Config(y, i, b, Pi)
    return tables


def sample_template(params: TemplateParams, N: Optional[GenericMatrix] = None) -> TemplateState:
    tower = params.tower
    if N is None:
        N = template_matrix(tower, params.s, params.r, params.d)
    iotas = [sample_injection(tower, params.n, derive_rng(params.seed, f"template/iota/{i}"))
             for i in range(params.z)]
    tables = sample_tables(params, derive_rng(params.seed, "template/tables"))
    return TemplateState(params, iotas, N, tables)


def identity_injection(tower: FieldTower) -> LinearInjection:
    k = tower.dim
    return LinearInjection(tower, [[1 if a == b else 0 for b in range(k)] for a in range(k)])


# -- the plain design ------------------------------------------------------------------

@dataclass
class PlainDesign:
    blocks: list
    lam: int
    N: GenericMatrix = field(repr=False)


def plain_design(q: int, n: int, s: int, r: int, ell: int, m: int,
                 N: Optional[GenericMatrix] = None) -> PlainDesign:
    """All span(N x) for x in K^r of full L-rank, with K identified with F_q^n."""
    if ell * m != n:
        raise DimensionError(f"plain design needs ell*m = n, got {ell}*{m} != {n}")
    p, e = prime_power(q)
    tower = build_tower(p, e, ell, m)
    if N is None:
        N = template_matrix(tower, s, r)
    K = tower.K
    blocks = []
    counts = {R: 0 for R in enumerate_grassmannian(n, r, q)}
    for x in full_L_rank_vectors(tower, r):
        v = linalg.matvec(K, N.entries, list(x))
        S = Subspace.span([tower.coords(a) for a in v], q, n)
        if S.dim != s:
            raise VerificationError(f"span(Nx) has dimension {S.dim} < {s} at x = {x}")
        blocks.append(S)
        for R in r_subspaces_of(S, r):
            counts[R] += 1
    values = set(counts.values())
    if len(values) != 1:
        lo = min(counts, key=lambda R: counts[R])
        hi = max(counts, key=lambda R: counts[R])
        raise VerificationError(f"non-constant multiplicity: {lo.literal()} covered {counts[lo]} "
                                f"times, {hi.literal()} covered {counts[hi]} times")
    return PlainDesign(blocks, values.pop(), N)


# -- checks ---------------------------------------------------------------------------

@dataclass
class TemplateReport:
    passed: bool
    bullets: dict
    witnesses: dict
    obstruction: dict


def verify_template(st: TemplateState, measure: bool = True) -> TemplateReport:
    p = st.params
    bullets, wit = {}, {}
    # 1: well-defined
    ok = True
    for blk in st.S_tem:
        S, parts, _ = st._pieces(blk.i, blk.x)
        if S.dim != p.s or any(R.dim != p.r for _, R, _ in parts):
            ok = False
            wit["1"] = blk.S.literal()
            break
    bullets["1"] = ok
    # 2: every r-space at most once
    counts = {}
    for blk in st.S_tem:
        for R in r_subspaces_of(blk.S, p.r):
            counts[R] = counts.get(R, 0) + 1
    dup = [R for R, c in counts.items() if c > 1]
    bullets["2"] = not dup
    if dup:
        wit["2"] = sorted(dup)[0].literal()
    # 4: full L-dimension of the pull-back
    ok = True
    for blk in st.S_tem:
        for R in r_subspaces_of(blk.S, p.r):
            pre = preimage(R, st.iotas[blk.i])
            if pre is None or L_rank(st.tower, pre) != p.r:
                ok = False
                wit["4"] = R.literal()
                break
    bullets["4"] = ok
    obstruction = {}
    if measure:
        G = set(counts)
        for t in (p.s, p.r + p.s):
            if t > p.n:
                continue
            worst = Fraction(0)
            for R in enumerate_grassmannian(p.n, p.r, p.q):
                if R in G:
                    continue
                exts = extensions(R, t)
                bad = sum(1 for T in exts if any(Rp in G for Rp in r_subspaces_of(T, p.r)))
                if exts:
                    worst = max(worst, Fraction(bad, len(exts)))
            obstruction[t] = worst
    return TemplateReport(all(bullets.values()), bullets, wit, obstruction)


def L_span(tower: FieldTower, xs: Sequence[int]) -> tuple:
    """Canonical RREF rows (over L, in L^m coordinates) of span_L(xs)."""
    rows, _ = linalg.rref(tower.L, [list(tower.L_coords(x)) for x in xs])
    return tuple(tuple(r) for r in rows)


def L_span_contains(tower: FieldTower, big: tuple, small: tuple) -> bool:
    if not small:
        return True
    return linalg.rank(tower.L, [list(r) for r in big] + [list(r) for r in small]) == len(big)


STAR = "*"


def ind_chi(st: TemplateState, R: Subspace) -> tuple:
    i = st.color.get(R)
    if i is None:
        return STAR, [R]
    iota = st.iotas[i]
    span_R = L_span(st.tower, preimage(R, iota))
    chi = []
    for Rp, c in sorted(st.color.items()):
        if c != i:
            continue
        if L_span_contains(st.tower, span_R, L_span(st.tower, preimage(Rp, iota))):
            chi.append(Rp)
    return i, chi


def is_field_disjoint(st: TemplateState, spaces) -> tuple[bool, Optional[tuple]]:
    spaces = sorted(set(spaces))
    chis = {R: set(ind_chi(st, R)[1]) for R in spaces}
    for R1 in spaces:
        for R2 in spaces:
            if R1 != R2 and R1 in chis[R2]:
                return False, (R1, R2)
    return True, None


def _L_subspaces(tower: FieldTower, span: tuple, k: int) -> list:
    """All L-subspaces of dimension k inside the L-space with RREF rows ``span``."""
    Lq = tower.L.order
    t = len(span)
    if k == 0:
        return [()]
    out = []
    for sub in enumerate_grassmannian(t, k, Lq):
        vecs = linalg.matmul(tower.L, [list(v) for v in sub.basis()], [list(r) for r in span])
        rows, _ = linalg.rref(tower.L, vecs)
        out.append(tuple(tuple(r) for r in rows))
    return out


@dataclass
class FieldBoundReport:
    passed: bool
    max_count: int
    worst: Optional[tuple]  # (color, sign, Q* rows)


def field_bounded_check(Phi: SignedQSystem, st: TemplateState, theta: Fraction) -> FieldBoundReport:
    p = st.params
    t = Phi.k
    if t not in (p.r, p.s):
        raise DimensionError(f"field boundedness is defined for t in {{r, s}}, got {t}")
    best, worst = 0, None
    for i, iota in enumerate(st.iotas):
        for sign, part in (("+", Phi.positive_part()), ("-", Phi.negative_part())):
            counts = {}
            for T, c in part.items():
                pre = preimage(T, iota)
                if pre is None or L_rank(st.tower, pre) != t:
                    continue
                span = L_span(st.tower, pre)
                for Q in _L_subspaces(st.tower, span, p.r - 1):
                    counts[Q] = counts.get(Q, 0) + abs(c)
            for Q, c in sorted(counts.items()):
                if c > best:
                    best, worst = c, (i, sign, Q)
    return FieldBoundReport(best <= Fraction(theta) * p.q ** p.n, best, worst)


@dataclass
class CompatReport:
    passed: bool
    bullet: Optional[int]
    basis: Optional[tuple] = None
    undecided: bool = False


def config_compatible(st: TemplateState, S: Subspace, i: int,
                      budget: int = BASIS_BUDGET) -> CompatReport:
    p = st.params
    pre = preimage(S, st.iotas[i])
    if pre is None:
        return CompatReport(False, 1)
    if L_rank(st.tower, pre) != p.s:
        return CompatReport(False, 2)
    F = S.field
    vecs = [v for v in itertools.product(range(p.q), repeat=p.n) if any(v) and S.contains_vector(v)]
    tried = 0
    for b in itertools.permutations(vecs, p.s):
        if linalg.rank(F, [list(v) for v in b]) != p.s:
            continue
        tried += 1
        if tried > budget:
            return CompatReport(False, None, undecided=True)
        ok = True
        for Pi in st.reds:
            Pb = tuple(tuple(v) for v in linalg.matmul(F, [list(r) for r in Pi], [list(v) for v in b]))
            R = Subspace.span(Pb, p.q, p.n)
            c = st.tables.get(R)
            if c is None or c.Pi != Pi or c.b != Pb or st.color.get(R) != i:
                ok = False
                break
        if ok:
            return CompatReport(True, None, tuple(b))
    return CompatReport(False, 3)
