"""Desk-scale construction pipeline.

Stages: template, regularity-boosting weights, greedy nibble, covering the
leave into the template, lattice decomposition of the spill, absorption and
exact verification.  Every stage reports its status; none of them degrade
silently.
"""
from __future__ import annotations

import itertools
import json
import math
import random
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from . import linalg
from .design_lattice import (averaged_coeffs, check_boundary, divisibility_check,
                             lattice_membership)
from .errors import BudgetExceeded, DimensionError, QDesignError, VerificationError
from .gadgets import (AbsorberFlip, GenericityWarning, GenericMatrix, build_absorber,
                      is_L_independent, matrix_from_log, verify_absorber)
from .qsystem import SignedQSystem, boundary, codegree_profile
from .subspace import (L_rank, Subspace, enumerate_grassmannian, gaussian_binomial, meet_join,
                       preimage, r_subspaces_of)
from .template import (TemplateParams, TemplateState, config_compatible, derive_rng,
                       ind_chi, is_field_disjoint, plain_design, sample_template)


def frac_str(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


# -- design accounting ---------------------------------------------------------------

def multiplicities(blocks: Sequence[Subspace], n: int, r: int, q: int) -> dict:
    counts = {R: 0 for R in enumerate_grassmannian(n, r, q)}
    for S in blocks:
        for R in r_subspaces_of(S, r):
            counts[R] += 1
    return counts


@dataclass
class Accounting:
    block_total: int      # sum over blocks of [s r]_q
    deficit: int          # sum of max(0, lam - mult)
    excess: int           # sum of max(0, mult - lam)
    target: int           # lam [n r]_q

    @property
    def holds(self) -> bool:
        return self.block_total == self.target - self.deficit + self.excess

    def to_json(self) -> dict:
        return {"block_total": self.block_total, "deficit": self.deficit, "excess": self.excess,
                "target": self.target, "holds": self.holds}


def accounting(blocks: Sequence[Subspace], n: int, s: int, r: int, q: int, lam: int) -> Accounting:
    counts = multiplicities(blocks, n, r, q)
    deficit = sum(max(0, lam - c) for c in counts.values())
    excess = sum(max(0, c - lam) for c in counts.values())
    return Accounting(len(blocks) * gaussian_binomial(s, r, q), deficit, excess,
                      lam * gaussian_binomial(n, r, q))


@dataclass
class DesignReport:
    passed: bool
    histogram: dict
    simple: Optional[bool]
    witness: Optional[str] = None


def verify_design(blocks: Sequence[Subspace], n: int, s: int, r: int, lam: int,
                  simple: bool = False, q: Optional[int] = None) -> DesignReport:
    if q is None:
        q = blocks[0].q if blocks else 2
    if any(B.dim != s or B.n != n for B in blocks):
        return DesignReport(False, {}, None, "block of wrong dimension")
    counts = multiplicities(blocks, n, r, q)
    hist: dict = {}
    for c in counts.values():
        hist[c] = hist.get(c, 0) + 1
    witness = None
    ok = set(hist) == {lam}
    if not ok:
        witness = next(R.literal() for R, c in sorted(counts.items()) if c != lam)
    is_simple = len(set(blocks)) == len(blocks)
    if simple and not is_simple:
        ok = False
        witness = witness or "repeated block"
    return DesignReport(ok, dict(sorted(hist.items())), is_simple if simple else None, witness)


# -- regularity boosting -------------------------------------------------------------

@dataclass
class BoostResult:
    psi: dict             # unobstructed s-space -> Fraction
    c: dict               # unobstructed r-space -> Fraction
    identity_holds: bool
    max_deviation: Fraction
    bound: Fraction
    skipped: Optional[str] = None


def boost_weights(st: TemplateState) -> BoostResult:
    p = st.params
    q, n, s, r = p.q, p.n, p.s, p.r
    G = set(st.color)
    Tr = [R for R in enumerate_grassmannian(n, r, q) if R not in G]
    Ts = [S for S in enumerate_grassmannian(n, s, q)
          if not any(R in G for R in r_subspaces_of(S, r))]
    Trs = [T for T in enumerate_grassmannian(n, r + s, q)
           if not any(R in G for R in r_subspaces_of(T, r))] if r + s <= n else []
    Ts_of = {R: 0 for R in Tr}
    for S in Ts:
        for R in r_subspaces_of(S, r):
            Ts_of[R] += 1
    Trs_of = {R: [] for R in Tr}
    for T in Trs:
        for R in r_subspaces_of(T, r):
            Trs_of[R].append(T)
    top = gaussian_binomial(n - r, s - r, q)
    c = {}
    for R in Tr:
        if not Trs_of[R]:
            if Ts_of[R] != top:
                return BoostResult({S: Fraction(1) for S in Ts}, {}, False, Fraction(0), Fraction(0),
                                   skipped=f"no unobstructed (r+s)-space above {R.literal()}")
            c[R] = Fraction(0)
        else:
            c[R] = Fraction(top - Ts_of[R], len(Trs_of[R]))
    f = averaged_coeffs(q, r, s).f
    psi = {S: Fraction(1) for S in Ts}
    for R in Tr:
        if not c[R]:
            continue
        for T in Trs_of[R]:
            for S in r_subspaces_of(T, s):
                psi[S] += c[R] * f[meet_join(S, R)[2][0]]
    deg = {R: Fraction(0) for R in Tr}
    for S, w in psi.items():
        for R in r_subspaces_of(S, r):
            deg[R] += w
    holds = all(v == top for v in deg.values())
    dev = max((abs(w - 1) for w in psi.values()), default=Fraction(0))
    cmax = max((abs(x) for x in c.values()), default=Fraction(0))
    fmax = max(abs(x) for x in f)
    bound = cmax * fmax * gaussian_binomial(n - s, r, q) * gaussian_binomial(r + s, r, q)
    return BoostResult(psi, c, holds, dev, bound)


# -- greedy nibble ----------------------------------------------------------------------

@dataclass
class NibbleResult:
    matching: list
    leave: SignedQSystem
    vertices: int = 0
    dropped: int = 0      # edges with nonpositive weight

    @property
    def leave_fraction(self) -> Fraction:
        return Fraction(len(self.leave), max(1, self.vertices))


def greedy_nibble(vertices: SignedQSystem, edges: Sequence[Subspace], rng: random.Random,
                  weights: Optional[dict] = None) -> NibbleResult:
    """Random greedy matching: edges in weighted random order, kept when all
    their r-spaces are still uncovered.

    The order uses exponential keys u^(1/w), so each kept edge is a weighted
    draw among the edges still available at that moment.
    """
    r = vertices.k
    vset = set(vertices.support())
    keyed, dropped = [], 0
    for E in edges:
        if any(R not in vset for R in r_subspaces_of(E, r)):
            raise DimensionError(f"edge {E.literal()} has an r-space outside the vertex set")
        w = Fraction(1) if weights is None else Fraction(weights.get(E, 1))
        u = rng.random()
        if w <= 0:
            dropped += 1
            continue
        keyed.append((-math.log(u) / float(w) if u > 0 else math.inf, E))
    keyed.sort(key=lambda t: (t[0], t[1]))
    covered = set()
    matching = []
    for _, E in keyed:
        rs = r_subspaces_of(E, r)
        if any(R in covered for R in rs):
            continue
        covered.update(rs)
        matching.append(E)
    leave = SignedQSystem(vertices.q, vertices.n, r, {R: 1 for R in vset if R not in covered})
    return NibbleResult(matching, leave, len(vset), dropped)


# -- covering the leave ----------------------------------------------------------------

@dataclass
class SpillState:
    ok: bool
    S_cover: list
    spill: SignedQSystem
    stuck: Optional[Subspace] = None
    field_disjoint: Optional[bool] = None
    candidates: list = field(default_factory=list)   # candidate count per leave r-space


def cover_leave(st: TemplateState, leave: SignedQSystem, rng: random.Random,
                rainbow: bool = True) -> SpillState:
    """Cover each leave r-space by an s-space whose other r-spaces are template
    r-spaces not used before (nor field-related to used ones)."""
    p = st.params
    q, n, s, r = p.q, p.n, p.s, p.r
    for R in leave.support():
        if R in st.color:
            raise DimensionError(f"leave r-space {R.literal()} lies in the template")
    used: set = set()
    used_chi: set = set()
    S_cover = []
    spill = SignedQSystem(q, n, r)
    counts = []
    chi_cache = {}

    def chi(R):
        if R not in chi_cache:
            chi_cache[R] = set(ind_chi(st, R)[1])
        return chi_cache[R]

    all_s = enumerate_grassmannian(n, s, q)
    for R in leave.support():
        cands = []
        for S in all_s:
            if not S.contains(R):
                continue
            others = [Rp for Rp in r_subspaces_of(S, r) if Rp != R]
            if any(Rp not in st.color for Rp in others):
                continue
            cols = [st.color[Rp] for Rp in others]
            if rainbow and len(set(cols)) != len(cols):
                continue
            if any(preimage(S, st.iotas[c]) is None for c in set(cols)):
                continue
            if any(Rp in used or Rp in used_chi or (chi(Rp) & used) for Rp in others):
                continue
            cands.append(S)
        counts.append(len(cands))
        if not cands:
            return SpillState(False, S_cover, spill, stuck=R, candidates=counts)
        S = cands[rng.randrange(len(cands))]
        S_cover.append(S)
        for Rp in r_subspaces_of(S, r):
            if Rp != R:
                used.add(Rp)
                used_chi |= chi(Rp)
                spill.add_to(Rp, 1)
    fd, _ = is_field_disjoint(st, spill.support())
    return SpillState(True, S_cover, spill, None, fd, counts)


# -- absorbers in the template ---------------------------------------------------------

def find_xstar(st: TemplateState, u: int) -> GenericMatrix:
    """First x* (lexicographic in generator exponents) for which [N | x*] has L-rank s
    and the absorber at the canonical parameters verifies."""
    from .gadgets import canonical_parameters
    tower, N = st.tower, st.N
    s = N.rows
    order = tower.L.order - 1
    wp, w = canonical_parameters(tower, N.cols, u)
    for vals in itertools.product([None] + list(range(order)), repeat=s * u):
        X = matrix_from_log(tower, s, u, vals)
        aug = [a + b for a, b in zip(N.entries, X.entries)]
        if linalg.rank(tower.K, aug) < s:
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", GenericityWarning)
            if verify_absorber(build_absorber(tower, N, X, wp, w)).passed:
                return X
    raise QDesignError("no admissible x* over L")


@dataclass
class PlacedAbsorber:
    flip: AbsorberFlip
    root: Subspace        # in V
    P_out: list           # in V
    P_in: list            # in V


def _to_V(st: TemplateState, i: int, P: Subspace) -> Subspace:
    iota = st.iotas[i]
    return Subspace.span([iota.apply_coords(v) for v in P.basis()], st.params.q, st.params.n)


def find_valid_absorbers(st: TemplateState, S: Subspace, i: int, xstar: GenericMatrix,
                         budget: int = 1 << 20) -> list:
    p = st.params
    tower = st.tower
    K = tower.K
    comp = config_compatible(st, S, i)
    if not comp.passed:
        raise VerificationError(f"{S.literal()} is not configuration compatible for color {i} "
                                f"(bullet {comp.bullet})")
    iota = st.iotas[i]
    bprime = [iota.inverse(v) for v in comp.basis]
    r, u = p.r, xstar.cols
    if K.order ** (r + u) > budget:
        raise BudgetExceeded(f"|K|^(r+u) = {K.order ** (r + u)} exceeds the budget")
    S_tem_i = st.S_tem_set(i)
    found = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GenericityWarning)
        for params in itertools.product(range(K.order), repeat=r + u):
            wp, w = params[:r], params[r:]
            lhs = [K.add(a, b) for a, b in zip(linalg.matvec(K, st.N.entries, list(wp)),
                                              linalg.matvec(K, xstar.entries, list(w)))]
            if lhs != bprime or not is_L_independent(tower, params):
                continue
            a = build_absorber(tower, st.N, xstar, wp, w)
            P_in = [_to_V(st, i, P) for P in a.P_in]
            if not all(P in S_tem_i for P in P_in):
                continue
            if not verify_absorber(a).passed:
                continue
            P_out = [_to_V(st, i, P) for P in a.P_out]
            root = _to_V(st, i, a.root)
            if root != S:
                raise VerificationError("absorber root does not match")  # pragma: no cover
            found.append(PlacedAbsorber(a, root, P_out, P_in))
    return found


@dataclass
class AbsorbResult:
    ok: bool
    Phi2: Optional[SignedQSystem] = None
    Phi1: Optional[SignedQSystem] = None
    chosen: dict = field(default_factory=dict)
    failure: Optional[str] = None
    nodes: int = 0


def check_absorb_hypotheses(st: TemplateState, Phi3: SignedQSystem) -> list:
    """Violations of the absorption hypotheses, as (kind, witness) pairs."""
    p = st.params
    bad = []
    if any(c not in (0, 1) for _, c in Phi3.items()):
        bad.append(("values", "coefficients outside {0,1}"))
    if boundary(Phi3, p.r).max_abs() > 1:
        bad.append(("boundary", "an r-space is covered more than once"))
    colors = {}
    for S in Phi3.support():
        ok = [i for i in range(p.z) if config_compatible(st, S, i).passed]
        if not ok:
            bad.append(("compatible", S.literal()))
        else:
            colors[S] = ok[0]
    by_color: dict = {}
    for S, i in colors.items():
        by_color.setdefault(i, []).append(S)
    for i, group in by_color.items():
        for S1, S2 in itertools.combinations(group, 2):
            meet = S1.meet(S2)
            pre = preimage(meet, st.iotas[i]) if meet.dim else []
            if pre and L_rank(st.tower, pre) >= p.r:
                bad.append(("L-intersection", f"{S1.literal()} / {S2.literal()}"))
    return bad


def absorb_spill(st: TemplateState, Phi3: SignedQSystem, xstar: GenericMatrix,
                 budget: int = 100_000) -> AbsorbResult:
    """Assign disjoint valid absorbers by backtracking, fewest options first."""
    p = st.params
    bad = check_absorb_hypotheses(st, Phi3)
    if bad:
        return AbsorbResult(False, failure=f"hypotheses violated: {bad[:3]}")
    options = {}
    for S in Phi3.support():
        i = next(i for i in range(p.z) if config_compatible(st, S, i).passed)
        options[S] = find_valid_absorbers(st, S, i, xstar)
    order = sorted(options, key=lambda S: (len(options[S]), S))
    if order and not options[order[0]]:
        return AbsorbResult(False, failure=f"no valid absorber for {order[0].literal()}")
    chosen: dict = {}
    used_in, used_out = set(), set()
    nodes = 0

    def rec(k):
        nonlocal nodes
        if k == len(order):
            return True
        S = order[k]
        for a in options[S]:
            nodes += 1
            if nodes > budget:
                raise BudgetExceeded("absorber backtracking budget exhausted")
            pin = set(a.P_in)
            pout = set(a.P_out) - {S}
            if pin & used_in or pout & used_out or pout & used_in:
                continue
            chosen[S] = a
            used_in.update(pin)
            used_out.update(pout)
            if rec(k + 1):
                return True
            used_in.difference_update(pin)
            used_out.difference_update(pout)
            del chosen[S]
        return False

    try:
        success = rec(0)
    except BudgetExceeded as exc:
        return AbsorbResult(False, failure=str(exc), nodes=nodes)
    if not success:
        return AbsorbResult(False, failure="absorbers conflict for every assignment", nodes=nodes)
    Phi2 = SignedQSystem.from_subspaces(sorted(used_in), p.q, p.n, p.s)
    Phi1 = SignedQSystem.from_subspaces(sorted(used_out), p.q, p.n, p.s)
    check_boundary(Phi2 - Phi1, p.r, boundary(Phi3, p.r), "absorption")
    return AbsorbResult(True, Phi2, Phi1, chosen, None, nodes)


# -- orchestration ----------------------------------------------------------------------------

@dataclass
class PipelineConfig:
    q: int
    n: int
    s: int
    r: int
    lam: int = 1
    tower: str = "2^1:2:2"
    z: int = 1
    tau: Fraction = Fraction(1)
    d: int = 1
    u: int = 1
    budgets: dict = field(default_factory=dict)

    @classmethod
    def from_json(cls, obj: dict) -> "PipelineConfig":
        return cls(obj["q"], obj["n"], obj["s"], obj["r"], obj.get("lambda", 1),
                   obj.get("tower", "2^1:2:2"), obj.get("z", 1), Fraction(str(obj.get("tau", "1"))),
                   obj.get("d", 1), obj.get("u", 1), dict(obj.get("budgets", {})))

    def to_json(self) -> dict:
        return {"q": self.q, "n": self.n, "s": self.s, "r": self.r, "lambda": self.lam,
                "tower": self.tower, "z": self.z, "tau": frac_str(self.tau), "d": self.d,
                "u": self.u, "budgets": self.budgets}

    def template_params(self, seed: int) -> TemplateParams:
        _, ell, m = self.tower.split(":")
        return TemplateParams(self.q, self.n, self.s, self.r, int(ell), int(m), self.z, self.tau,
                              self.d, seed)


def _stage(report, name, status, **metrics):
    report["stages"].append({"stage": name, "status": status, **metrics})


def _account(report, blocks, cfg, lam):
    acc = accounting(blocks, cfg.n, cfg.s, cfg.r, cfg.q, lam)
    report["stages"][-1]["accounting"] = acc.to_json()
    if not acc.holds:
        raise VerificationError("accounting identity fails")  # pragma: no cover


def run_pipeline(cfg: PipelineConfig, seed: int = 0) -> dict:
    report = {"config": cfg.to_json(), "seed": seed, "stages": [], "result": "stopped"}
    ok, failing = divisibility_check(cfg.n, cfg.s, cfg.r, cfg.lam, cfg.q)
    if not ok:
        _stage(report, "divisibility", "rejected", failing_i=failing)
        report["stopped_at"] = "divisibility"
        return report
    _stage(report, "divisibility", "pass")
    tp = cfg.template_params(seed)

    if tp.tau == 1 and tp.z == 1 and tp.n == tp.ell * tp.m:
        pd = plain_design(cfg.q, cfg.n, cfg.s, cfg.r, tp.ell, tp.m)
        if pd.lam == cfg.lam:
            _stage(report, "plain_template", "pass", blocks=len(pd.blocks), lam=pd.lam)
            _account(report, pd.blocks, cfg, cfg.lam)
            rep = verify_design(pd.blocks, cfg.n, cfg.s, cfg.r, cfg.lam, q=cfg.q)
            _stage(report, "verify_design", "pass" if rep.passed else "fail",
                   histogram={str(k): v for k, v in rep.histogram.items()})
            report["result"] = "design" if rep.passed else "failed"
            report["blocks"] = [B.literal() for B in pd.blocks]
            return report

    try:
        st = sample_template(tp)
    except QDesignError as exc:
        _stage(report, "template", "error", error=str(exc))
        report["stopped_at"] = "template"
        return report
    blocks = [b.S for b in st.S_tem]
    _stage(report, "template", "pass", template_blocks=len(blocks), template_r_spaces=len(st.color))
    _account(report, blocks, cfg, cfg.lam)

    bw = boost_weights(st)
    _stage(report, "boost", "skipped" if bw.skipped else ("pass" if bw.identity_holds else "fail"),
           max_deviation=frac_str(bw.max_deviation), bound=frac_str(bw.bound),
           reason=bw.skipped)
    weights = None if bw.skipped else bw.psi

    G = set(st.color)
    verts = SignedQSystem(cfg.q, cfg.n, cfg.r,
                          {R: 1 for R in enumerate_grassmannian(cfg.n, cfg.r, cfg.q) if R not in G})
    edges = [S for S in enumerate_grassmannian(cfg.n, cfg.s, cfg.q)
             if not any(R in G for R in r_subspaces_of(S, cfg.r))]
    nib = greedy_nibble(verts, edges, derive_rng(seed, "nibble"), weights)
    blocks = blocks + nib.matching
    pos, neg = codegree_profile(nib.leave)
    _stage(report, "nibble", "pass", matching=len(nib.matching), leave=len(nib.leave),
           leave_fraction=frac_str(nib.leave_fraction),
           leave_codegree=[pos, neg], dropped=nib.dropped)
    _account(report, blocks, cfg, cfg.lam)

    if cfg.lam != 1:
        _stage(report, "cover_leave", "unsupported", reason="absorption path builds lambda = 1 only")
        report["stopped_at"] = "cover_leave"
        return report
    sp = cover_leave(st, nib.leave, derive_rng(seed, "cover"))
    if not sp.ok:
        _stage(report, "cover_leave", "fail", stuck=sp.stuck.literal(), candidates=sp.candidates)
        report["stopped_at"] = "cover_leave"
        return report
    blocks = blocks + sp.S_cover
    _stage(report, "cover_leave", "pass", cover=len(sp.S_cover), spill=len(sp.spill),
           field_disjoint=sp.field_disjoint)
    _account(report, blocks, cfg, cfg.lam)

    if sp.spill.is_zero():
        Phi3 = SignedQSystem(cfg.q, cfg.n, cfg.s)
    else:
        try:
            mem = lattice_membership(sp.spill, cfg.s)
        except QDesignError as exc:
            _stage(report, "spill_decomposition", "error", error=str(exc))
            report["stopped_at"] = "spill_decomposition"
            return report
        if not mem.member:
            _stage(report, "spill_decomposition", "fail", reason="spill not in the design lattice")
            report["stopped_at"] = "spill_decomposition"
            return report
        Phi3 = mem.preimage
    bad = check_absorb_hypotheses(st, Phi3)
    _stage(report, "spill_decomposition", "pass" if not bad else "fail",
           support=len(Phi3), violations=[list(v) for v in bad[:5]])
    if bad:
        report["stopped_at"] = "spill_decomposition"
        return report

    if Phi3.is_zero():
        ab = AbsorbResult(True, SignedQSystem(cfg.q, cfg.n, cfg.s), SignedQSystem(cfg.q, cfg.n, cfg.s))
    else:
        xstar = find_xstar(st, cfg.u)
        ab = absorb_spill(st, Phi3, xstar)
    if not ab.ok:
        _stage(report, "absorb", "fail", reason=ab.failure)
        report["stopped_at"] = "absorb"
        return report
    final = [B for B in blocks if B not in set(ab.Phi2.support())] + ab.Phi1.support()
    _stage(report, "absorb", "pass", removed=len(ab.Phi2), added=len(ab.Phi1))
    _account(report, final, cfg, cfg.lam)
    rep = verify_design(final, cfg.n, cfg.s, cfg.r, cfg.lam, simple=True, q=cfg.q)
    _stage(report, "verify_design", "pass" if rep.passed else "fail",
           histogram={str(k): v for k, v in rep.histogram.items()})
    report["result"] = "design" if rep.passed else "failed"
    report["blocks"] = [B.literal() for B in final]
    return report


def report_to_text(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=1) + "\n"
