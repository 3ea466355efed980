"""Generic matrices over L, subspace exchanges and absorber flips.

Matrices over L or K are lists of rows of K-codes (L is handled through its
image inside K).  An s-space built from a vector v in K^s is the F_q-span of
the s elements of v inside K, read in the fixed F_q-basis 1, alpha, ...,
alpha^{lm-1}; it is therefore a Subspace of F_q^{lm}.
"""
from __future__ import annotations

import itertools
import json
import warnings
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

from . import linalg
from .errors import BudgetExceeded, FieldError, FormatError, SearchExhausted
from .fields import FieldTower, build_tower
from .qsystem import SignedQSystem, boundary
from .subspace import L_rank, Subspace, enumerate_red_profiles, meet_join

Matrix = list  # list of rows of K-codes


class GenericityWarning(UserWarning):
    pass


@dataclass
class GenericMatrix:
    tower: FieldTower = field(repr=False)
    rows: int
    cols: int
    entries: list
    level: str = "L"
    d: int = 1
    log: list = field(default_factory=list)  # exponent of the level's generator per entry

    def __eq__(self, other):
        return (isinstance(other, GenericMatrix) and self.tower.spec == other.tower.spec
                and (self.rows, self.cols, self.entries, self.level, self.d, self.log)
                == (other.rows, other.cols, other.entries, other.level, other.d, other.log))

    def to_json(self) -> dict:
        return {"rows": self.rows, "cols": self.cols, "level": self.level, "d": self.d,
                "log": self.log, "entries": self.entries}

    @classmethod
    def from_json(cls, tower: FieldTower, obj: dict) -> "GenericMatrix":
        return cls(tower, obj["rows"], obj["cols"], [list(r) for r in obj["entries"]],
                   obj["level"], obj["d"], list(obj["log"]))


def level_generator(tower: FieldTower, level: str) -> tuple[int, int]:
    """(generator as K-code, multiplicative order) for level 'L' or 'K'."""
    if level == "K":
        return tower.alpha, tower.K.order - 1
    if level == "L":
        return tower.alpha_L(), tower.L.order - 1
    raise FieldError(f"unknown level {level!r}")


def matrix_from_log(tower: FieldTower, rows: int, cols: int, log: Sequence[Optional[int]],
                    level: str = "L", d: int = 0) -> GenericMatrix:
    """Matrix whose entries are powers g^e of the level generator (None means 0)."""
    g, order = level_generator(tower, level)
    K = tower.K
    vals = [0 if e is None else K.pow(g, e) for e in log]
    entries = [vals[i * cols:(i + 1) * cols] for i in range(rows)]
    return GenericMatrix(tower, rows, cols, entries, level, d, list(log))


def generic_matrix(tower: FieldTower, rows: int, cols: int, d: int, level: str = "L",
                   offset: int = 0) -> GenericMatrix:
    """Entries g^{(d+1)^k} for k = offset, offset+1, ... in row-major order."""
    g, order = level_generator(tower, level)
    exps = [pow(d + 1, k, order) if order > 1 else 0 for k in range(offset, offset + rows * cols)]
    if len(set(exps)) != len(exps):
        raise FieldError(f"generator powers repeat modulo {order}: tower too small for "
                         f"{rows}x{cols} distinct entries at d = {d}")
    deg = tower.ell if level == "L" else tower.dim
    if deg <= (d + 1) ** (rows * cols):
        warnings.warn(f"extension degree {deg} <= (d+1)^{rows * cols}: the entries are not "
                      f"guaranteed generic; verify the consequences directly",
                      GenericityWarning, stacklevel=2)
    return matrix_from_log(tower, rows, cols, exps, level, d)


# -- small matrix helpers over K -------------------------------------------------

def _fq_matrices(q: int, r: int, s: int) -> Iterator[list]:
    for vals in itertools.product(range(q), repeat=r * s):
        yield [list(vals[i * s:(i + 1) * s]) for i in range(r)]


def full_rank_matrices(tower: FieldTower, r: int, s: int) -> list:
    """All rank-r matrices in F_q^{r x s}, entries as F_q codes."""
    F = tower.F
    return [P for P in _fq_matrices(tower.q, r, s) if linalg.rank(F, P) == r]


def fq_to_K(tower: FieldTower, P) -> list:
    return [[tower.emb_FK[a] for a in row] for row in P]


def row_space(tower: FieldTower, P) -> tuple:
    R, _ = linalg.rref(tower.F, P)
    return tuple(tuple(r) for r in R)


@dataclass
class GenericReport:
    passed: bool
    bullets: dict
    counterexample: Optional[dict] = None


GENERIC_BUDGET = 5_000_000


def verify_generic(N: GenericMatrix, r: int, s: int, budget: int = GENERIC_BUDGET,
                   bullets_to_check: Sequence[int] = (1, 2, 3)) -> GenericReport:
    """Exhaustively check the three linear-algebra consequences of genericity.

    1. Pi N is invertible for every rank-r Pi in F_q^{r x s}.
    2. y N (Pi N)^{-1} z is not in F_q whenever y is outside the row space
       of Pi and z is a nonzero vector of F_q^r.
    3. (P1 N)(P1* N)^{-1} z1 != (P2 N)(P2* N)^{-1} z2 for all nonzero z1, z2
       unless both P_i are row-equivalent to P_i* or P1*, P2* are row-equivalent.
    """
    tower = N.tower
    K, q = tower.K, tower.q
    if (N.rows, N.cols) != (s, r):
        raise FieldError(f"N must be {s} x {r}")
    if q ** (r * s) > 10 ** 5:
        raise BudgetExceeded("too many matrices Pi to enumerate")
    Pis = full_rank_matrices(tower, r, s)
    bullets = {}
    invs = {}
    for P in Pis:
        PN = linalg.matmul(K, fq_to_K(tower, P), N.entries)
        inv = linalg.inverse(K, PN)
        if inv is None:
            return GenericReport(False, {"1": False}, {"bullet": 1, "Pi": P})
        invs[tuple(map(tuple, P))] = (PN, inv)
    bullets["1"] = True
    if 2 not in bullets_to_check and 3 not in bullets_to_check:
        return GenericReport(True, bullets)

    zs = [list(z) for z in itertools.product(range(q), repeat=r) if any(z)]
    zsK = [[tower.emb_FK[a] for a in z] for z in zs]
    Fq_in_K = set(tower.emb_FK)
    ys = [list(y) for y in itertools.product(range(q), repeat=s) if any(y)]
    for P in (Pis if 2 in bullets_to_check else []):
        _, inv = invs[tuple(map(tuple, P))]
        rs = Subspace.span(P, q, s) if tower.e == 1 else None
        for y in ys:
            inside = (rs.contains_vector(y) if rs is not None
                      else linalg.rank(tower.F, P + [y]) == r)
            if inside:
                continue
            yN = linalg.vecmat(K, [tower.emb_FK[a] for a in y], N.entries)
            row = linalg.vecmat(K, yN, inv)
            for z in zsK:
                val = 0
                for a, b in zip(row, z):
                    val = K.add(val, K.mul(a, b))
                if val in Fq_in_K:
                    return GenericReport(False, {**bullets, "2": False},
                                         {"bullet": 2, "Pi": P, "y": y, "z": z})
    if 2 in bullets_to_check:
        bullets["2"] = True
    if 3 not in bullets_to_check:
        return GenericReport(True, bullets)

    # bullet 3: the target sets only depend on Pi* up to row equivalence
    reds = [list(map(list, P)) for P in enumerate_red_profiles(r, s, q)]
    sets = {}
    work = 0
    for P in Pis:
        PN = invs[tuple(map(tuple, P))][0]
        for Ps in reds:
            inv = invs[tuple(map(tuple, Ps))][1]
            M = linalg.matmul(K, PN, inv)
            vecs = frozenset(tuple(linalg.matvec(K, M, z)) for z in zsK)
            sets[(tuple(map(tuple, P)), tuple(map(tuple, Ps)))] = vecs
            work += len(zsK)
    keys = list(sets)
    rowsp = {k: row_space(tower, [list(x) for x in k[0]]) for k in keys}
    rowsp_star = {k: row_space(tower, [list(x) for x in k[1]]) for k in keys}
    for a in range(len(keys)):
        ka = keys[a]
        for b in range(len(keys)):
            kb = keys[b]
            if rowsp_star[ka] == rowsp_star[kb]:
                continue
            if rowsp[ka] == rowsp_star[ka] and rowsp[kb] == rowsp_star[kb]:
                continue
            work += 1
            if work > budget:
                raise BudgetExceeded("genericity bullet 3 exceeds the budget")
            common = sets[ka] & sets[kb]
            if common:
                return GenericReport(False, {**bullets, "3": False},
                                     {"bullet": 3, "Pi1": ka[0], "Pi1*": ka[1], "Pi2": kb[0],
                                      "Pi2*": kb[1], "vector": sorted(common)[0]})
    bullets["3"] = True
    return GenericReport(True, bullets)


# -- building s-spaces inside K ------------------------------------------------------

def span_in_K(tower: FieldTower, elems: Sequence[int]) -> Subspace:
    """F_q-span of K-elements as a subspace of F_q^{lm}."""
    return Subspace.span([tower.coords(x) for x in elems], tower.q, tower.dim)


def flip_vector(tower: FieldTower, N, x, xj, wprime, w) -> list:
    """N w' + (N x + x_j) w in K^s."""
    K = tower.K
    Nx = linalg.matmul(K, N, x) if x is not None else None
    left = linalg.matvec(K, N, wprime)
    if Nx is None:
        M = xj
    else:
        M = [[K.add(a, b) for a, b in zip(r1, r2)] for r1, r2 in zip(Nx, xj)]
    right = linalg.matvec(K, M, w)
    return [K.add(a, b) for a, b in zip(left, right)]


def L_matrices(tower: FieldTower, rows: int, cols: int) -> Iterator[list]:
    """All matrices in L^{rows x cols} (entries as K-codes), lexicographic in L-codes."""
    emb = tower.emb_LK
    for vals in itertools.product(range(tower.L.order), repeat=rows * cols):
        yield [[emb[vals[i * cols + j]] for j in range(cols)] for i in range(rows)]


def is_L_independent(tower: FieldTower, elems: Sequence[int]) -> bool:
    return L_rank(tower, elems) == len(elems)


def _zero(rows, cols):
    return [[0] * cols for _ in range(rows)]


@dataclass
class FamilyCheck:
    passed: bool
    failures: list


def check_families(A: Sequence[Subspace], B: Sequence[Subspace], s: int, r: int) -> FamilyCheck:
    """Dimension s, intra-family dim < r, cross-family dim <= r, equal boundaries."""
    fails = []
    for name, fam in (("first", A), ("second", B)):
        for i, P in enumerate(fam):
            if P.dim != s:
                fails.append({"check": "dimension", "family": name, "index": i, "dim": P.dim})
        for i in range(len(fam)):
            for j in range(i + 1, len(fam)):
                dm = meet_join(fam[i], fam[j])[2][0]
                if dm >= r:
                    fails.append({"check": "intra", "family": name, "pair": [i, j], "dim": dm})
                    break
    for i, P in enumerate(A):
        for j, Q in enumerate(B):
            dm = meet_join(P, Q)[2][0]
            if dm > r:
                fails.append({"check": "cross", "pair": [i, j], "dim": dm})
                break
    if not fails:
        k = A[0].n if A else (B[0].n if B else 0)
        q = A[0].q if A else (B[0].q if B else 2)
        dA = boundary(SignedQSystem.from_subspaces(A, q, k, s), r)
        dB = boundary(SignedQSystem.from_subspaces(B, q, k, s), r)
        if dA != dB:
            fails.append({"check": "boundary", "difference": len((dA - dB))})
    return FamilyCheck(not fails, fails)


# -- absorbers ------------------------------------------------------------------------

@dataclass
class AbsorberFlip:
    tower: FieldTower = field(repr=False)
    N: GenericMatrix = field(repr=False)
    xstar: GenericMatrix = field(repr=False)
    wprime: tuple
    w: tuple
    xs: list = field(repr=False)         # the x in L^{r x u}, in enumeration order
    P_out: list = field(repr=False)
    P_in: list = field(repr=False)
    root: Subspace = None

    @property
    def r(self):
        return self.N.cols

    @property
    def s(self):
        return self.N.rows

    @property
    def u(self):
        return self.xstar.cols


def build_absorber(tower: FieldTower, N: GenericMatrix, xstar: GenericMatrix,
                   wprime: Sequence[int], w: Sequence[int]) -> AbsorberFlip:
    """Out- and in-flips over all x in L^{r x u}; rejects L-dependent parameters."""
    s, r = N.rows, N.cols
    u = xstar.cols
    if xstar.rows != s or len(wprime) != r or len(w) != u:
        raise FieldError("shape mismatch between N, x*, w' and w")
    if not is_L_independent(tower, list(wprime) + list(w)):
        raise FieldError("parameters (w', w) are L-linearly dependent")
    if u < s:
        warnings.warn(f"u = {u} < s = {s}: absorber counts are not covered by the usual bound",
                      GenericityWarning, stacklevel=2)
    xs, P_out, P_in = [], [], []
    zero = _zero(s, u)
    for x in L_matrices(tower, r, u):
        xs.append(x)
        P_out.append(span_in_K(tower, flip_vector(tower, N.entries, x, xstar.entries, wprime, w)))
        P_in.append(span_in_K(tower, flip_vector(tower, N.entries, x, zero, wprime, w)))
    root = span_in_K(tower, flip_vector(tower, N.entries, None, xstar.entries, wprime, w))
    return AbsorberFlip(tower, N, xstar, tuple(wprime), tuple(w), xs, P_out, P_in, root)


@dataclass
class AbsorberReport:
    passed: bool
    bullets: dict
    failures: list
    recovery_count: Optional[int] = None


def verify_absorber(a: AbsorberFlip, recovery_cap: Optional[int] = None,
                    recovery_budget: int = 1 << 16) -> AbsorberReport:
    tower = a.tower
    K = tower.K
    bullets, failures = {}, []
    # 1: w' + x w is L-independent for all x
    ok = True
    for x in a.xs:
        xw = linalg.matvec(K, x, a.w)
        v = [K.add(p, t) for p, t in zip(a.wprime, xw)]
        if not is_L_independent(tower, v):
            ok = False
            failures.append({"bullet": 1, "x": x})
            break
    bullets["1"] = ok
    # 2: out-flip members distinct and s-dimensional
    dims_ok = all(P.dim == a.s for P in a.P_out + a.P_in)
    distinct = len(set(a.P_out)) == len(a.P_out) and len(set(a.P_in)) == len(a.P_in)
    bullets["2"] = dims_ok and distinct
    if not bullets["2"]:
        failures.append({"bullet": 2, "dims_ok": dims_ok, "distinct": distinct})
    fc = check_families(a.P_out, a.P_in, a.s, a.r)
    bullets["3"] = not any(f["check"] in ("intra", "dimension") for f in fc.failures)
    bullets["4"] = not any(f["check"] == "cross" for f in fc.failures)
    if bullets["3"] and bullets["4"] and not fc.passed:
        bullets["5"] = False
    else:
        dout = boundary(SignedQSystem.from_subspaces(a.P_out, tower.q, tower.dim, a.s), a.r)
        din = boundary(SignedQSystem.from_subspaces(a.P_in, tower.q, tower.dim, a.s), a.r)
        bullets["5"] = dout == din
    failures.extend(fc.failures)
    bullets["root"] = a.root in a.P_out
    rec = None
    if recovery_cap is not None:
        rec = recovery_count(a, budget=recovery_budget)
        bullets["recovery"] = rec <= recovery_cap
    return AbsorberReport(all(bullets.values()), bullets, failures, rec)


def recovery_count(a: AbsorberFlip, budget: int = 1 << 16) -> int:
    """Number of L-independent (w', w) whose in-flip equals that of ``a`` as a set."""
    tower = a.tower
    total = tower.K.order ** (a.r + a.u)
    if total > budget:
        raise BudgetExceeded(f"{total} parameter pairs exceed the recovery budget")
    target = frozenset(a.P_in)
    zero = _zero(a.s, a.u)
    count = 0
    for params in itertools.product(range(tower.K.order), repeat=a.r + a.u):
        wp, w = params[:a.r], params[a.r:]
        if not is_L_independent(tower, params):
            continue
        fam = set()
        for x in a.xs:
            fam.add(span_in_K(tower, flip_vector(tower, a.N.entries, x, zero, wp, w)))
            if len(fam) > len(target):
                break
        if fam == target:
            count += 1
    return count


def canonical_parameters(tower: FieldTower, r: int, u: int) -> tuple[tuple, tuple]:
    """w' = (1, alpha, ..., alpha^{r-1}) and w = (alpha^r, ..., alpha^{r+u-1}).

    These are L-independent whenever m >= r + u since alpha has degree m over L.
    """
    K = tower.K
    pw = [K.power_of_primitive(j) for j in range(r + u)]
    return tuple(pw[:r]), tuple(pw[r:])


def find_joint_generic(tower: FieldTower, s: int, r: int, u: int,
                       params_to_check: Optional[list] = None,
                       budget: int = 1 << 14, generic_bullets: Sequence[int] = (1, 2)
                       ) -> tuple[GenericMatrix, GenericMatrix, dict]:
    """Search (N, x*) over L with verified genericity consequences.

    Canonical generator-power matrices are tried first for d = 1, 2, ...;
    then all matrices in lexicographic order of generator exponents.  A
    candidate is accepted when N passes the selected ``verify_generic`` bullets, [N | x*] has
    L-rank s, and the absorbers at every parameter pair in
    ``params_to_check`` (default: the canonical pair) pass verification.
    """
    if tower.m < r + u:
        raise FieldError(f"m = {tower.m} < r + u = {r + u}: no L-independent parameters")
    if params_to_check is None:
        params_to_check = [canonical_parameters(tower, r, u)]
    log = {"tried": 0}
    order = tower.L.order - 1

    def accept(N, X):
        log["tried"] += 1
        if not verify_generic(N, r, s, bullets_to_check=generic_bullets).passed:
            return False
        aug = [rn + rx for rn, rx in zip(N.entries, X.entries)]
        if linalg.rank(tower.K, aug) < s:
            return False
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", GenericityWarning)
            for wp, w in params_to_check:
                if not verify_absorber(build_absorber(tower, N, X, wp, w)).passed:
                    return False
        return True

    def candidates():
        for d in range(1, 4):
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", GenericityWarning)
                    N = generic_matrix(tower, s, r, d)
                    X = generic_matrix(tower, s, u, d, offset=s * r)
            except FieldError:
                continue
            yield N, X, {"method": "canonical", "d": d}
        # exhaustive: exponents in [0, order) or zero (None), lexicographic
        choices = [None] + list(range(order))
        for vals in itertools.product(choices, repeat=s * (r + u)):
            nlog = vals[:s * r]
            xlog = vals[s * r:]
            yield (matrix_from_log(tower, s, r, nlog), matrix_from_log(tower, s, u, xlog),
                   {"method": "lexicographic"})

    for N, X, info in candidates():
        if log["tried"] >= budget:
            break
        if accept(N, X):
            info["tried"] = log["tried"]
            return N, X, info
    raise SearchExhausted(f"no jointly generic (N, x*) found after {log['tried']} candidates")


# -- subspace exchanges -------------------------------------------------------------------

@dataclass
class ExchangeGadget:
    q: int
    s: int
    r: int
    k: int
    params: dict
    Upsilon: list
    UpsilonPrime: list

    def __eq__(self, other):
        return (isinstance(other, ExchangeGadget)
                and (self.q, self.s, self.r, self.k, self.params) ==
                (other.q, other.s, other.r, other.k, other.params)
                and sorted(self.Upsilon) == sorted(other.Upsilon)
                and sorted(self.UpsilonPrime) == sorted(other.UpsilonPrime))


def _exchange_from_params(q: int, s: int, r: int, params: dict) -> ExchangeGadget:
    tower = FieldTower.parse(params["tower"])
    N = GenericMatrix.from_json(tower, params["N"])
    X2 = GenericMatrix.from_json(tower, params["x2"])
    wp, w = tuple(params["wprime"]), tuple(params["w"])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GenericityWarning)
        a = build_absorber(tower, N, X2, wp, w)
    # x^(1) = 0 gives the in-flip family, x^(2) the out-flip family
    return ExchangeGadget(q, s, r, tower.dim, params, a.P_in, a.P_out)


def verify_exchange(g: ExchangeGadget) -> FamilyCheck:
    return check_families(g.Upsilon, g.UpsilonPrime, g.s, g.r)


def build_exchange(q: int, s: int, r: int, max_u: int = 3, max_ell: int = 4, max_m: int = 4,
                   budget: int = 1 << 12) -> ExchangeGadget:
    """Search (u, k1 = ell, k2 = ell m) ascending for a verified exchange.

    X = F_{q^ell} and Y = F_{q^{ell m}}; x^(1) = 0 and x^(2), N are found by
    ``find_joint_generic``; w', w are consecutive powers of the generator of Y.
    """
    from .fields import FIELD_BUDGET, prime_power
    p, e = prime_power(q)
    attempts = []
    for u in range(1, max_u + 1):
        for ell in range(1, max_ell + 1):
            for m in range(r + u, max_m + 1):
                if q ** (ell * m) > FIELD_BUDGET or q ** (ell * r * u) > 1 << 12:
                    continue
                tower = build_tower(p, e, ell, m)
                try:
                    N, X2, info = find_joint_generic(tower, s, r, u, budget=budget)
                except (SearchExhausted, BudgetExceeded, FieldError) as exc:
                    attempts.append({"u": u, "ell": ell, "m": m, "result": str(exc)})
                    continue
                wp, w = canonical_parameters(tower, r, u)
                params = {"tower": tower.spec, "u": u, "k1": ell, "k2": ell * m,
                          "d": info.get("d"), "method": info["method"],
                          "N": N.to_json(), "x1": "zero", "x2": X2.to_json(),
                          "wprime": list(wp), "w": list(w)}
                g = _exchange_from_params(q, s, r, params)
                chk = verify_exchange(g)
                if chk.passed:
                    return g
                attempts.append({"u": u, "ell": ell, "m": m, "result": chk.failures[:1]})
    raise SearchExhausted(f"no verified exchange within the budget: {attempts[-3:]}")


# -- serialization ---------------------------------------------------------------------------

def _dump_blocks(header: dict, blocks: Sequence[SignedQSystem]) -> str:
    text = json.dumps(header, sort_keys=True) + "\n"
    return text + "".join(b.serialize() for b in blocks)


def _load_blocks(text: str) -> tuple[dict, list]:
    lines = text.splitlines()
    if not lines:
        raise FormatError("empty gadget file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise FormatError(f"line 1: bad JSON header: {exc}") from None
    blocks, cur = [], None
    for line in lines[1:]:
        if line.startswith("qsystem"):
            if cur is not None:
                blocks.append("\n".join(cur) + "\n")
            cur = [line]
        elif cur is not None:
            cur.append(line)
    if cur is not None:
        blocks.append("\n".join(cur) + "\n")
    return header, [SignedQSystem.parse(b) for b in blocks]


def exchange_to_text(g: ExchangeGadget) -> str:
    header = {"kind": "exchange", "q": g.q, "s": g.s, "r": g.r, "k": g.k, "params": g.params}
    fams = [SignedQSystem.from_subspaces(f, g.q, g.k, g.s) for f in (g.Upsilon, g.UpsilonPrime)]
    return _dump_blocks(header, fams)


def exchange_from_text(text: str) -> ExchangeGadget:
    header, blocks = _load_blocks(text)
    if header.get("kind") != "exchange" or len(blocks) != 2:
        raise FormatError("not an exchange gadget file")
    g = _exchange_from_params(header["q"], header["s"], header["r"], header["params"])
    for fam, blk in zip((g.Upsilon, g.UpsilonPrime), blocks):
        if SignedQSystem.from_subspaces(fam, g.q, g.k, g.s) != blk:
            raise FormatError("stored families do not match the stored parameters")
    return g


def absorber_to_text(a: AbsorberFlip) -> str:
    t = a.tower
    header = {"kind": "absorber", "tower": t.spec, "N": a.N.to_json(), "xstar": a.xstar.to_json(),
              "wprime": list(a.wprime), "w": list(a.w), "root": a.root.literal()}
    fams = [SignedQSystem.from_subspaces(f, t.q, t.dim, a.s) for f in (a.P_out, a.P_in)]
    return _dump_blocks(header, fams)


def absorber_from_text(text: str) -> AbsorberFlip:
    header, blocks = _load_blocks(text)
    if header.get("kind") != "absorber" or len(blocks) != 2:
        raise FormatError("not an absorber file")
    tower = FieldTower.parse(header["tower"])
    N = GenericMatrix.from_json(tower, header["N"])
    X = GenericMatrix.from_json(tower, header["xstar"])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GenericityWarning)
        a = build_absorber(tower, N, X, tuple(header["wprime"]), tuple(header["w"]))
    for fam, blk in zip((a.P_out, a.P_in), blocks):
        if SignedQSystem.from_subspaces(fam, tower.q, tower.dim, a.s) != blk:
            raise FormatError("stored flips do not match the stored parameters")
    if a.root.literal() != header["root"]:
        raise FormatError("stored root does not match")
    return a
