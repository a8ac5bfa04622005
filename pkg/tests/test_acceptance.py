"""One test per acceptance criterion; each records a PASS/FAIL line."""

from __future__ import annotations

import io
import random
import time

from crispcheck.conversion import (
    VPi, VSigma, VUnit, convertible, env_for, evaluate, force, normalize,
)
from crispcheck.core import (
    CRISP, ORDINARY, App, Context, Fst, J, Lam, Pair, Refl, Snd, TT, Var, restrict, shift,
)
from crispcheck.driver import Options, Session
from crispcheck.formalization import run_manifest_cli

from . import test_formalization as formal
from .admissibility import substitute_and_check
from .conftest import ACCEPTANCE, CORPUS, MANIFEST
from .oracles import exhaustive_check
from .termgen import A, Gen, _restrict, base_signature, kernel_context, sample, value


def record(n: int, text: str, ok: bool) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {text}"
    ACCEPTANCE.append(line)
    print(line)
    assert ok, line


def test_criterion_1_manifest(manifest_report):
    start = time.perf_counter()
    code = run_manifest_cli(str(MANIFEST), Options(), io.StringIO(), io.StringIO())
    seconds = time.perf_counter() - start
    pos, neg = len(manifest_report.positive_files), len(manifest_report.negative_files)
    record(1, f"manifest exit {code}, {pos} positive and {neg} negative files, {seconds:.1f}s",
           code == 0 and pos >= 7 and neg >= 10 and seconds < 60)


def test_criterion_2_nogo(corpus_session):
    m = corpus_session.load(CORPUS / "nogo.ctt")
    graph = sorted(d.name for d in m.closure())
    c = m.sig.get("nogo")
    ok = (m.ok and c is not None and not c.postulated and not c.level_params
          and formal.check_type(m.sig, "nogo", "IntUniv -> Empty")
          and graph == ["fibrations", "nogo", "prelude"])
    record(2, f"nogo : IntUniv -> Empty checked; imports {graph}", ok)


def test_criterion_3_universe(corpus_session):
    m = corpus_session.load(CORPUS / "universe.ctt")
    good = [n for n, src in formal.EQ20.items()
            if n in m.sig and not m.sig[n].postulated and formal.check_type(m.sig, n, src)]
    ok = m.ok and len(good) == 5 and m.sig["C"].postulated
    record(3, f"universe.ctt has {len(good)}/5 classifier types, C postulated", ok)


def test_criterion_4_negatives(manifest_report):
    neg = [r for r in manifest_report.results if r.entry.file.startswith("negative/")]
    wrong = [r for r in neg if r.entry.file in ("negative/wrong.ctt", "negative/eq12.ctt")
             and not r.entry.whole_file]
    located = 0
    for r in wrong:
        d = r.diagnostic
        text = (CORPUS / r.entry.file).read_bytes()[d.span[0]:d.span[1]].decode()
        located += d.code == "E-CRISP-VAR" and text in ("x", "i")
    files = {r.entry.file for r in neg}
    ok = all(r.passed for r in neg) and located == len(wrong) == 2 and len(files) >= 10
    record(4, f"{sum(r.passed for r in neg)}/{len(neg)} negative entries over {len(files)} "
              f"files as expected; {located}/2 crisp violations located", ok)


def test_criterion_5_conversion():
    sig = base_signature()
    counts = dict.fromkeys(["terms", "refl", "sym", "trans", "quote", "eta-pi",
                            "eta-crisp-pi", "eta-sigma", "eta-unit", "j-beta", "jc-beta"], 0)
    failures = []
    for seed in range(500):
        s = sample(seed)
        ctx = kernel_context(sig, s.ctx)
        types = tuple(e.type for e in ctx.entries)
        d = len(types)
        ty = evaluate(sig, env_for(d), s.type)

        def conv(x, y):
            return convertible(sig, types, ty, value(sig, d, x), value(sig, d, y))

        g = Gen(random.Random(seed))
        nf = normalize(sig, types, s.term, ty)
        beta = g.variant(s.term, s.type)
        counts["terms"] += 2
        checks = {"refl": conv(s.term, s.term) and conv(s.other, s.other),
                  "sym": conv(s.term, s.other) == conv(s.other, s.term),
                  "quote": conv(s.term, nf)
                  and conv(s.other, normalize(sig, types, s.other, ty)),
                  # nf ~ t and t ~ beta, so nf ~ beta
                  "trans": conv(beta, s.term) and conv(nf, beta)}
        match force(ty):
            case VPi(mod):
                kind = "eta-crisp-pi" if mod is CRISP else "eta-pi"
                checks[kind] = conv(s.term, Lam(App(shift(s.term, 1), Var(0))))
            case VSigma():
                checks["eta-sigma"] = conv(s.term, Pair(Fst(s.term), Snd(s.term)))
            case VUnit():
                checks["eta-unit"] = conv(s.term, TT()) and conv(s.term, s.other)
        for crisp, key in ((False, "j-beta"), (True, "jc-beta")):
            x = g.term(_restrict(s.ctx) if crisp else s.ctx, A, 2)
            jt = J(A, x, Lam(Lam(shift(s.type, 2))), s.term, x, Refl(), crisp)
            checks[key] = conv(jt, s.term)
        for k, v in checks.items():
            counts[k] += 1
            if not v:
                failures.append((seed, k))
    exercised = all(v > 0 for v in counts.values())
    summary = ", ".join(f"{k} {v}" for k, v in counts.items())
    record(5, f"{len(failures)} failures ({summary})", not failures and exercised
           and counts["terms"] >= 500)


def test_criterion_6_levels():
    count, bad, collisions = exhaustive_check(4)
    record(6, f"{count} level expressions of depth <= 4, {len(bad)} mismatches, "
              f"{collisions} duplicate normal forms", count > 10**6 and not bad and not collisions)


def test_criterion_7_admissibility(crisp_pairs):
    sig, pairs = crisp_pairs
    bad = 0
    for p in pairs:
        try:
            substitute_and_check(sig, p)
        except Exception:
            bad += 1
    rng = random.Random(7)
    props = 0
    for _ in range(500):
        ctx = Context()
        for _ in range(rng.randrange(8)):
            ctx = ctx.extend("v", rng.choice([CRISP, ORDINARY]), None)
            if rng.random() < 0.3:
                ctx = restrict(ctx)
        r = restrict(ctx)
        props += (restrict(r) == r and all(
            b.accessible <= a.accessible and b.accessible == (a.accessible and a.modality is CRISP)
            for a, b in zip(ctx.entries, r.entries)))
    record(7, f"{len(pairs) - bad}/{len(pairs)} corpus substitutions re-check; "
              f"restriction laws hold on {props}/500 contexts",
           len(pairs) >= 100 and not bad and props == 500)


def test_criterion_8_double_check():
    session = Session(Options(double_check=True))
    for p in sorted(CORPUS.glob("*.ctt")):
        session.load(p)
    ok = all(m.ok for m in session.modules.values())
    n = sum(len(list(m.sig)) for m in session.modules.values())
    record(8, f"{n} corpus constants re-checked without elaboration in "
              f"{len(session.modules)} files", ok and n > 0)
