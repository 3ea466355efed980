"""Command line entry point: ``qdesign <command> ...``; results are printed as JSON."""
from __future__ import annotations

import argparse
import json
import sys
import warnings

from .design_lattice import divisibility_check, kantor, local_decode
from .errors import QDesignError
from .fields import FieldTower
from .gadgets import (GenericityWarning, absorber_from_text, absorber_to_text, build_absorber,
                      build_exchange, canonical_parameters, exchange_from_text, exchange_to_text,
                      find_joint_generic, verify_absorber, verify_exchange)
from .pipeline import (PipelineConfig, greedy_nibble, report_to_text, run_pipeline, verify_design)
from .qsystem import SignedQSystem
from .subspace import enumerate_grassmannian, gaussian_binomial
from .template import TemplateState, derive_rng, sample_template, verify_template


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


def _write(path, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _read(path: str) -> str:
    with open(path) as fh:
        return fh.read()


def _config(path: str) -> PipelineConfig:
    return PipelineConfig.from_json(json.loads(_read(path)))


def cmd_gaussian(a):
    _emit({"n": a.n, "k": a.k, "q": a.q, "value": gaussian_binomial(a.n, a.k, a.q)})


def cmd_divisibility(a):
    ok, failing = divisibility_check(a.n, a.s, a.r, a.lam, a.q)
    _emit({"admissible": ok, "failing_i": failing})


def cmd_kantor(a):
    M, delta = kantor(a.q, a.r, a.s)
    _emit({"q": a.q, "r": a.r, "s": a.s, "delta": delta})


def cmd_decode(a):
    g = local_decode(a.q, a.r, a.s)
    g.verify()
    _emit({"delta": g.delta, "R0": g.R0.literal(), "T0": g.T0.literal(),
           "coeffs": {S.literal(): c for S, c in sorted(g.coeffs.items())}})


def cmd_exchange_build(a):
    g = build_exchange(a.q, a.s, a.r)
    _write(a.output, exchange_to_text(g))


def cmd_exchange_verify(a):
    g = exchange_from_text(_read(a.file))
    chk = verify_exchange(g)
    _emit({"passed": chk.passed, "failures": chk.failures[:5], "family_size": len(g.Upsilon)})
    return 0 if chk.passed else 1


def cmd_absorber_build(a):
    tower = FieldTower.parse(a.tower)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GenericityWarning)
        N, X, _ = find_joint_generic(tower, a.s, a.r, a.u)
        wp, w = canonical_parameters(tower, a.r, a.u)
        ab = build_absorber(tower, N, X, wp, w)
    _write(a.output, absorber_to_text(ab))


def cmd_absorber_verify(a):
    ab = absorber_from_text(_read(a.file))
    rep = verify_absorber(ab, recovery_cap=a.cap)
    _emit({"passed": rep.passed, "bullets": rep.bullets, "recovery_count": rep.recovery_count})
    return 0 if rep.passed else 1


def cmd_template_sample(a):
    cfg = _config(a.config)
    st = sample_template(cfg.template_params(a.seed))
    _write(a.output, st.to_text())


def cmd_template_verify(a):
    st = TemplateState.from_text(_read(a.file))
    rep = verify_template(st)
    _emit({"passed": rep.passed, "bullets": rep.bullets, "witnesses": rep.witnesses,
           "blocks": len(st.S_tem),
           "obstruction": {str(t): f"{v.numerator}/{v.denominator}" for t, v in rep.obstruction.items()}})
    return 0 if rep.passed else 1


def cmd_nibble(a):
    cfg = _config(a.config)
    verts = SignedQSystem(cfg.q, cfg.n, cfg.r,
                          {R: 1 for R in enumerate_grassmannian(cfg.n, cfg.r, cfg.q)})
    edges = enumerate_grassmannian(cfg.n, cfg.s, cfg.q)
    res = greedy_nibble(verts, edges, derive_rng(a.seed, "nibble"))
    f = res.leave_fraction
    _emit({"matching": len(res.matching), "leave": len(res.leave),
           "leave_fraction": f"{f.numerator}/{f.denominator}"})


def cmd_pipeline(a):
    rep = run_pipeline(_config(a.config), a.seed)
    _write(a.output, report_to_text(rep))
    return 0 if rep["result"] == "design" else 1


def cmd_verify(a):
    Phi = SignedQSystem.parse(_read(a.file))
    blocks = []
    for S, c in Phi.items():
        if c < 0:
            raise QDesignError("block multiset has a negative coefficient")
        blocks.extend([S] * c)
    rep = verify_design(blocks, a.n, a.s, a.r, a.lam, simple=a.simple, q=Phi.q)
    _emit({"passed": rep.passed, "histogram": {str(k): v for k, v in rep.histogram.items()},
           "simple": rep.simple, "witness": rep.witness})
    return 0 if rep.passed else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qdesign", description="Subspace design toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gaussian")
    for k in ("n", "k", "q"):
        p.add_argument(k, type=int)
    p.set_defaults(func=cmd_gaussian)

    p = sub.add_parser("divisibility")
    for k in ("n", "s", "r", "lam", "q"):
        p.add_argument(k, type=int)
    p.set_defaults(func=cmd_divisibility)

    for name, fn in (("kantor", cmd_kantor), ("decode", cmd_decode)):
        p = sub.add_parser(name)
        for k in ("q", "r", "s"):
            p.add_argument(k, type=int)
        p.set_defaults(func=fn)

    ex = sub.add_parser("exchange").add_subparsers(dest="action", required=True)
    p = ex.add_parser("build")
    for k in ("q", "s", "r"):
        p.add_argument(k, type=int)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_exchange_build)
    p = ex.add_parser("verify")
    p.add_argument("file")
    p.set_defaults(func=cmd_exchange_verify)

    ab = sub.add_parser("absorber").add_subparsers(dest="action", required=True)
    p = ab.add_parser("build")
    p.add_argument("tower")
    p.add_argument("--s", type=int, default=2)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--u", type=int, default=1)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_absorber_build)
    p = ab.add_parser("verify")
    p.add_argument("file")
    p.add_argument("--cap", type=int, default=None)
    p.set_defaults(func=cmd_absorber_verify)

    tp = sub.add_parser("template").add_subparsers(dest="action", required=True)
    p = tp.add_parser("sample")
    p.add_argument("config")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_template_sample)
    p = tp.add_parser("verify")
    p.add_argument("file")
    p.set_defaults(func=cmd_template_verify)

    p = sub.add_parser("nibble")
    p.add_argument("config")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_nibble)

    p = sub.add_parser("pipeline")
    p.add_argument("config")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("verify")
    p.add_argument("file")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=int, required=True)
    p.add_argument("--simple", action="store_true")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        rc = args.func(args)
    except QDesignError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return rc or 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
