"""Corpus-derived instances of the admissible crisp substitution rule.

Every crisp premise the elaborator meets in the corpus is a term ``a`` that
checks in a restricted context.  Every level-free defined constant of crisp
function type ``(x :: A) -> B`` with a lambda body supplies ``b`` checked
under ``x :: A``.  Whenever the premise's type is ``A`` the pair is an
instance of the rule, and ``b[a/x]`` must check at ``B[a/x]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from crispcheck.conversion import Closure, conv_type, env_for, evaluate
from crispcheck.core import CRISP, Context, Lam, Pi, Signature, Term, substitute
from crispcheck.driver import Session
from crispcheck.typecheck import CheckError, Rechecker, check_declaration


@dataclass
class Premise:
    decl: str
    level_vars: frozenset[str]
    ctx: Context
    term: Term
    type: object


@dataclass
class Pair:
    premise: Premise
    fn: str


def collect_premises(paths: list[Path]) -> tuple[Signature, list[Premise]]:
    """Re-elaborate the import closures of ``paths``, recording crisp premises."""
    session = Session()
    fresh: dict[Path, Signature] = {}
    premises: list[Premise] = []
    for path in paths:
        for m in session.load(path).closure():
            if m.path in fresh:
                continue
            sig = Signature([fresh[d.path] for d in m.imports], m.name)
            fresh[m.path] = sig
            for d in m.decls:
                if d.kind == "import":
                    continue
                lvs = frozenset(d.level_params)

                def hook(rctx, raw, t, ty, name=d.name, lvs=lvs):
                    premises.append(Premise(name, lvs, rctx, t, ty))

                check_declaration(sig, d, on_crisp_premise=hook)
    return Signature(list(fresh.values()), "all"), premises


def crisp_functions(sig: Signature) -> list[str]:
    out = []
    for name, c in sig.table.items():
        match c.type, c.body:
            case Pi(m, _, _), Lam() if m is CRISP and not c.level_params:
                out.append(name)
    return out


def pairs(sig: Signature, premises: list[Premise], per_function: int | None = None) -> list[Pair]:
    """All matching pairs, or an evenly spread sample of distinct premises per function."""
    seen = set()
    distinct = []
    for p in premises:
        key = (p.decl, len(p.ctx), p.term)
        if key not in seen:
            seen.add(key)
            distinct.append(p)
    out = []
    for n in crisp_functions(sig):
        dom = evaluate(sig, (), sig[n].type.dom)
        hits = [p for p in distinct
                if conv_type(sig, tuple(e.type for e in p.ctx.entries), p.type, dom)]
        if per_function is not None and len(hits) > per_function:
            step = len(hits) / per_function
            hits = [hits[int(k * step)] for k in range(per_function)]
        out += [Pair(p, n) for p in hits]
    return out


def substitute_and_check(sig: Signature, pair: Pair) -> None:
    """Raises ``CheckError`` if ``b[a/x]`` does not check at ``B[a/x]``."""
    p, c = pair.premise, sig[pair.fn]
    body = substitute(c.body.body, p.term, 0)
    a = evaluate(sig, env_for(len(p.ctx)), p.term)
    cod = Closure(sig, (), c.type.cod)(a)
    Rechecker(sig, p.level_vars).check(p.ctx, body, cod)


__all__ = ["CheckError", "collect_premises", "crisp_functions", "pairs", "substitute_and_check"]
