"""Bidirectional elaboration of raw terms into the kernel, with crisp modal rules.

Crisp positions are exactly: the domain of a crisp function type, the
argument of a crisp application, and the type, base point, end point and
path of ``Jc`` (whose motive also binds its two arguments crisply).  Those
positions are checked in the restricted context, where ordinary variables
are still present but unusable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

from .conversion import (
    REFL, EMPTY, UNIT, VEq, VPi, VSigma, VUniv, Value, apply, const_type, conv_type,
    convertible, env_for, evaluate, force, fresh, readback, vfst,
)
from .core import (
    CRISP, ORDINARY, Absurd, Ann, App, Const, Constant, Context, EmptyT, Eq, Fst, J,
    Lam, Level, Modality, Pair, Pi, Refl, Sigma, Signature, Snd, TT, Term, Univ,
    UnitT, Var, free_vars, restrict,
)
from .surface import (
    NO_SPAN, RAbsurd, RAnn, RApp, RawDecl, REmpty, REq, RFst, RJ, RLam, RNum, RPair,
    RPi, RRefl, RSigma, RSnd, RTT, RUnit, RUniv, RVar, Raw, Span, pretty,
)

CODES = ("E-CRISP-VAR", "E-CONV", "E-UNIV", "E-SCOPE", "E-PARSE", "E-LEX",
         "E-DUPLICATE", "E-IMPORT")


class CheckError(Exception):
    def __init__(self, code: str, message: str, span: Span = NO_SPAN, context: str = ""):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message
        self.span = span
        self.context = context


class Skipped(Exception):
    """A declaration mentions an earlier declaration that failed."""

    def __init__(self, name: str):
        super().__init__(name)
        self.name = name


@dataclass
class Diagnostic:
    code: str
    message: str
    span: Span = NO_SPAN
    file: str = ""
    context: str = ""
    decl: str = ""

    def to_json(self) -> str:
        return json.dumps({"code": self.code, "file": self.file, "start": self.span[0],
                           "end": self.span[1], "message": self.message}, sort_keys=True)


def snapshot(sig: Signature, ctx: Context) -> str:
    """The telescope with modalities, one binding per entry."""
    parts = []
    names: list[str] = []
    for k, e in enumerate(ctx.entries):
        ty = pretty(readback(sig, k, e.type), names=names) if e.type is not None else "?"
        flag = "" if e.accessible else " [unusable here]"
        parts.append(f"{e.name} {e.modality.colon} {ty}{flag}")
        names.append(e.name)
    return ", ".join(parts) if parts else "(empty)"


@dataclass
class Elaborator:
    sig: Signature
    level_vars: frozenset[str] = frozenset()
    failed: frozenset[str] = frozenset()
    # verify the crisp-zone invariant on every crisp extension
    audit: bool = False
    # called as hook(restricted_ctx, raw, core, type) after each crisp premise
    on_crisp_premise: Callable | None = None
    audited: int = field(default=0, init=False)

    # -- helpers

    def types(self, ctx: Context) -> tuple:
        return tuple(e.type for e in ctx.entries)

    def eval(self, ctx: Context, t: Term) -> Value:
        return evaluate(self.sig, env_for(len(ctx)), t)

    def show(self, ctx: Context, v: Value) -> str:
        return pretty(readback(self.sig, len(ctx), v), names=[e.name for e in ctx.entries])

    def error(self, code: str, message: str, raw: Raw | None, ctx: Context) -> CheckError:
        span = raw.span if raw is not None else NO_SPAN
        return CheckError(code, message, span, snapshot(self.sig, ctx))

    def extend(self, ctx: Context, name: str, modality: Modality, ty: Value) -> Context:
        if self.audit and modality is CRISP:
            self.audited += 1
            t = readback(self.sig, len(ctx), ty)
            for i in free_vars(t):
                if ctx.entry(i).modality is not CRISP:
                    raise AssertionError(
                        f"crisp binding {name} depends on ordinary {ctx.entry(i).name}")
        return ctx.extend(name, modality, ty)

    def level(self, raw: Raw, ctx: Context) -> Level:
        match raw:
            case RNum(n):
                return Level(n)
            case RVar("lzero"):
                return Level()
            case RVar(name):
                if name in self.level_vars:
                    return Level.var(name)
                raise self.error("E-SCOPE", f"unknown level variable {name}", raw, ctx)
            case RApp(RVar("lsuc"), a):
                return self.level(a, ctx).suc()
            case RApp(RApp(RVar("lmax"), a), b):
                return self.level(a, ctx).max(self.level(b, ctx))
        raise self.error("E-UNIV", f"not a universe level: {pretty(raw)}", raw, ctx)

    def crisp_premise(self, ctx: Context, raw: Raw, ty: Value) -> Term:
        rctx = restrict(ctx)
        t = self.check(rctx, raw, ty)
        if self.on_crisp_premise is not None:
            self.on_crisp_premise(rctx, raw, t, ty)
        return t

    # -- inference

    def infer_type(self, ctx: Context, raw: Raw) -> tuple[Term, Level]:
        t, ty = self.infer(ctx, raw)
        ty = force(ty)
        if not isinstance(ty, VUniv):
            raise self.error("E-CONV", f"expected a type, but {pretty(raw)} has type "
                             f"{self.show(ctx, ty)}", raw, ctx)
        return t, ty.level

    def infer(self, ctx: Context, raw: Raw) -> tuple[Term, Value]:
        match raw:
            case RVar(name):
                return self.variable(ctx, raw, name)
            case RApp():
                return self.application(ctx, raw)
            case RUniv(lv):
                level = self.level(lv, ctx)
                return Univ(level), VUniv(level.suc())
            case RPi(crisp, name, dom, cod):
                mod = CRISP if crisp else ORDINARY
                a, la = self.infer_type(restrict(ctx) if crisp else ctx, dom)
                if crisp and self.on_crisp_premise is not None:
                    self.on_crisp_premise(restrict(ctx), dom, a, VUniv(la))
                b, lb = self.infer_type(self.extend(ctx, name, mod, self.eval(ctx, a)), cod)
                return Pi(mod, a, b, name), VUniv(la.max(lb))
            case RSigma(name, dom, cod):
                a, la = self.infer_type(ctx, dom)
                b, lb = self.infer_type(self.extend(ctx, name, ORDINARY, self.eval(ctx, a)), cod)
                return Sigma(a, b, name), VUniv(la.max(lb))
            case RFst(p):
                t, ty = self.infer(ctx, p)
                ty = force(ty)
                if not isinstance(ty, VSigma):
                    raise self.error("E-CONV", f"fst expects a pair, got type {self.show(ctx, ty)}",
                                     p, ctx)
                return Fst(t), ty.dom
            case RSnd(p):
                t, ty = self.infer(ctx, p)
                ty = force(ty)
                if not isinstance(ty, VSigma):
                    raise self.error("E-CONV", f"snd expects a pair, got type {self.show(ctx, ty)}",
                                     p, ctx)
                return Snd(t), ty.cod(vfst(self.eval(ctx, t)))
            case REq(a, x, y):
                at, la = self.infer_type(ctx, a)
                av = self.eval(ctx, at)
                return Eq(at, self.check(ctx, x, av), self.check(ctx, y, av)), VUniv(la)
            case RJ():
                return self.j_elim(ctx, raw)
            case RUnit():
                return UnitT(), VUniv(Level())
            case REmpty():
                return EmptyT(), VUniv(Level())
            case RTT():
                return TT(), UNIT
            case RAbsurd(a, e):
                at, _ = self.infer_type(ctx, a)
                return Absurd(at, self.check(ctx, e, EMPTY)), self.eval(ctx, at)
            case RAnn(e, a):
                at, _ = self.infer_type(ctx, a)
                av = self.eval(ctx, at)
                return Ann(self.check(ctx, e, av), at), av
            case RNum():
                raise self.error("E-UNIV", "a universe level is not a term", raw, ctx)
        what = {RLam: "function", RPair: "pair", RRefl: "refl"}.get(type(raw), "term")
        raise self.error("E-CONV", f"cannot infer the type of this {what}; add an annotation",
                         raw, ctx)

    def variable(self, ctx: Context, raw: Raw, name: str) -> tuple[Term, Value]:
        i = ctx.lookup(name)
        if i is not None:
            e = ctx.entry(i)
            if not e.accessible:
                raise self.error("E-CRISP-VAR", f"ordinary variable {name} cannot be used "
                                 "in a crisp position", raw, ctx)
            return Var(i), e.type
        const = self.sig.get(name)
        if const is not None:
            if const.level_params:
                raise self.error("E-UNIV", f"{name} expects {len(const.level_params)} "
                                 "level argument(s)", raw, ctx)
            return Const(name), const_type(self.sig, name, ())
        if name in self.failed:
            raise Skipped(name)
        raise self.error("E-SCOPE", f"unbound name {name}", raw, ctx)

    def application(self, ctx: Context, raw: RApp) -> tuple[Term, Value]:
        args: list[Raw] = []
        head = raw
        while isinstance(head, RApp):
            args.append(head.arg)
            head = head.fn
        args.reverse()
        if (isinstance(head, RVar) and ctx.lookup(head.name) is None
                and head.name in self.sig and self.sig[head.name].level_params):
            k = len(self.sig[head.name].level_params)
            if len(args) < k:
                raise self.error("E-UNIV", f"{head.name} expects {k} level argument(s)",
                                 raw, ctx)
            levels = tuple(self.level(a, ctx) for a in args[:k])
            t: Term = Const(head.name, levels)
            ty = const_type(self.sig, head.name, levels)
            args = args[k:]
        else:
            t, ty = self.infer(ctx, head)
        for arg in args:
            ty = force(ty)
            if not isinstance(ty, VPi):
                raise self.error("E-CONV", f"{pretty(head)} is applied to too many arguments; "
                                 f"its type here is {self.show(ctx, ty)}", arg, ctx)
            if ty.modality is CRISP:
                a = self.crisp_premise(ctx, arg, ty.dom)
            else:
                a = self.check(ctx, arg, ty.dom)
            t = App(t, a)
            ty = ty.cod(self.eval(ctx, a))
        return t, ty

    def j_elim(self, ctx: Context, raw: RJ) -> tuple[Term, Value]:
        ra, rx, rc, rz, ry, rp = raw.args
        crisp = raw.crisp
        if crisp:
            at, _ = self.infer_type(restrict(ctx), ra)
            av = self.eval(ctx, at)
            xt = self.crisp_premise(ctx, rx, av)
        else:
            at, _ = self.infer_type(ctx, ra)
            av = self.eval(ctx, at)
            xt = self.check(ctx, rx, av)
        xv = self.eval(ctx, xt)
        ct = self.motive(ctx, rc, av, xv, CRISP if crisp else ORDINARY)
        cv = self.eval(ctx, ct)
        zt = self.check(ctx, rz, apply(apply(cv, xv), REFL))
        premise = self.crisp_premise if crisp else self.check
        yt = premise(ctx, ry, av)
        yv = self.eval(ctx, yt)
        pt = premise(ctx, rp, VEq(av, xv, yv))
        return (J(at, xt, ct, zt, yt, pt, crisp),
                apply(apply(cv, yv), self.eval(ctx, pt)))

    def motive(self, ctx: Context, raw: Raw, av: Value, xv: Value, mod: Modality) -> Term:
        if isinstance(raw, RLam) and isinstance(raw.body, RLam):
            c1 = self.extend(ctx, raw.name, mod, av)
            c2 = self.extend(c1, raw.body.name, mod, VEq(av, xv, fresh(len(ctx))))
            body, _ = self.infer_type(c2, raw.body.body)
            return Lam(Lam(body, raw.body.name), raw.name)
        t, ty = self.infer(ctx, raw)
        ty = force(ty)
        y = fresh(len(ctx))
        ok = (isinstance(ty, VPi) and ty.modality is mod
              and conv_type(self.sig, self.types(ctx), ty.dom, av))
        if ok:
            inner = force(ty.cod(y))
            ok = (isinstance(inner, VPi) and inner.modality is mod
                  and conv_type(self.sig, self.types(ctx) + (av,), inner.dom, VEq(av, xv, y))
                  and isinstance(force(inner.cod(fresh(len(ctx) + 1))), VUniv))
        if not ok:
            raise self.error("E-CONV", f"motive has type {self.show(ctx, ty)}, expected a "
                             f"two-argument type family over {self.show(ctx, av)}", raw, ctx)
        return t

    # -- checking

    def check(self, ctx: Context, raw: Raw, ty: Value) -> Term:
        ty = force(ty)
        match raw:
            case RLam(name, body):
                if not isinstance(ty, VPi):
                    raise self.error("E-CONV", "a function is given where a value of type "
                                     f"{self.show(ctx, ty)} is expected", raw, ctx)
                inner = self.extend(ctx, name, ty.modality, ty.dom)
                return Lam(self.check(inner, body, ty.cod(fresh(len(ctx)))), name)
            case RPair(a, b):
                if not isinstance(ty, VSigma):
                    raise self.error("E-CONV", "a pair is given where a value of type "
                                     f"{self.show(ctx, ty)} is expected", raw, ctx)
                at = self.check(ctx, a, ty.dom)
                return Pair(at, self.check(ctx, b, ty.cod(self.eval(ctx, at))))
            case RRefl():
                if not isinstance(ty, VEq):
                    raise self.error("E-CONV", "refl is given where a value of type "
                                     f"{self.show(ctx, ty)} is expected", raw, ctx)
                if not convertible(self.sig, self.types(ctx), ty.type, ty.lhs, ty.rhs):
                    raise self.error("E-CONV", f"refl cannot prove {self.show(ctx, ty)}: "
                                     f"{self.show(ctx, ty.lhs)} and {self.show(ctx, ty.rhs)} "
                                     "are not definitionally equal", raw, ctx)
                return Refl()
        t, got = self.infer(ctx, raw)
        if not conv_type(self.sig, self.types(ctx), got, ty):
            code = "E-UNIV" if isinstance(force(got), VUniv) and isinstance(ty, VUniv) else "E-CONV"
            raise self.error(code, f"type mismatch: expected {self.show(ctx, ty)}, "
                             f"got {self.show(ctx, got)}", raw, ctx)
        return t

    def check_crisp_argument(self, ctx: Context, raw: Raw, ty: Value) -> Term:
        return self.crisp_premise(ctx, raw, ty)


# ---------------------------------------------------------------------------
# Declarations


def check_declaration(sig: Signature, decl: RawDecl, failed: frozenset[str] = frozenset(),
                      **options) -> Constant:
    if decl.name in sig:
        raise CheckError("E-DUPLICATE", f"{decl.name} is already declared", decl.name_span)
    if len(set(decl.level_params)) != len(decl.level_params):
        raise CheckError("E-DUPLICATE", f"repeated level parameter in {decl.name}",
                         decl.name_span)
    el = Elaborator(sig, frozenset(decl.level_params), failed, **options)
    ty, _ = el.infer_type(Context(), decl.type)
    body = None
    if decl.body is not None:
        body = el.check(Context(), decl.body, evaluate(sig, (), ty))
    const = Constant(decl.name, decl.level_params, ty, body)
    sig.add(const)
    return const


# ---------------------------------------------------------------------------
# Independent re-check of elaborated kernel terms


class Rechecker:
    """Checks kernel terms directly, without going back to the source."""

    def __init__(self, sig: Signature, level_vars=frozenset()):
        self.sig = sig
        self.level_vars = frozenset(level_vars)

    def fail(self, code: str, message: str, ctx: Context):
        raise CheckError(code, message, NO_SPAN, snapshot(self.sig, ctx))

    def eval(self, ctx: Context, t: Term) -> Value:
        return evaluate(self.sig, env_for(len(ctx)), t)

    def types(self, ctx: Context) -> tuple:
        return tuple(e.type for e in ctx.entries)

    def check_levels(self, levels, ctx: Context):
        for lv in levels:
            if not lv.free <= self.level_vars:
                self.fail("E-SCOPE", f"free level variable in {lv}", ctx)

    def infer_type(self, ctx: Context, t: Term) -> Level:
        ty = force(self.infer(ctx, t))
        if not isinstance(ty, VUniv):
            self.fail("E-CONV", "expected a type", ctx)
        return ty.level

    def infer(self, ctx: Context, t: Term) -> Value:
        match t:
            case Var(i):
                if i >= len(ctx):
                    self.fail("E-SCOPE", f"index {i} out of scope", ctx)
                e = ctx.entry(i)
                if not e.accessible:
                    self.fail("E-CRISP-VAR", f"{e.name} used in a crisp position", ctx)
                return e.type
            case Const(name, levels):
                const = self.sig.get(name)
                if const is None:
                    self.fail("E-SCOPE", f"unknown constant {name}", ctx)
                if len(levels) != len(const.level_params):
                    self.fail("E-UNIV", f"{name} needs {len(const.level_params)} levels", ctx)
                self.check_levels(levels, ctx)
                return const_type(self.sig, name, levels)
            case Univ(lv):
                self.check_levels([lv], ctx)
                return VUniv(lv.suc())
            case Pi(mod, a, b, name):
                la = self.infer_type(restrict(ctx) if mod is CRISP else ctx, a)
                lb = self.infer_type(ctx.extend(name, mod, self.eval(ctx, a)), b)
                return VUniv(la.max(lb))
            case Sigma(a, b, name):
                la = self.infer_type(ctx, a)
                lb = self.infer_type(ctx.extend(name, ORDINARY, self.eval(ctx, a)), b)
                return VUniv(la.max(lb))
            case App(f, a):
                fty = force(self.infer(ctx, f))
                if not isinstance(fty, VPi):
                    self.fail("E-CONV", "application of a non-function", ctx)
                self.check(restrict(ctx) if fty.modality is CRISP else ctx, a, fty.dom)
                return fty.cod(self.eval(ctx, a))
            case Fst(p):
                pty = force(self.infer(ctx, p))
                if not isinstance(pty, VSigma):
                    self.fail("E-CONV", "fst of a non-pair", ctx)
                return pty.dom
            case Snd(p):
                pty = force(self.infer(ctx, p))
                if not isinstance(pty, VSigma):
                    self.fail("E-CONV", "snd of a non-pair", ctx)
                return pty.cod(vfst(self.eval(ctx, p)))
            case Eq(a, x, y):
                la = self.infer_type(ctx, a)
                av = self.eval(ctx, a)
                self.check(ctx, x, av)
                self.check(ctx, y, av)
                return VUniv(la)
            case J(a, x, c, z, y, p, crisp):
                pctx = restrict(ctx) if crisp else ctx
                self.infer_type(pctx, a)
                av = self.eval(ctx, a)
                self.check(pctx, x, av)
                xv = self.eval(ctx, x)
                self.check_motive(ctx, c, av, xv, CRISP if crisp else ORDINARY)
                cv = self.eval(ctx, c)
                self.check(ctx, z, apply(apply(cv, xv), REFL))
                self.check(pctx, y, av)
                yv = self.eval(ctx, y)
                self.check(pctx, p, VEq(av, xv, yv))
                return apply(apply(cv, yv), self.eval(ctx, p))
            case UnitT() | EmptyT():
                return VUniv(Level())
            case TT():
                return UNIT
            case Absurd(a, e):
                self.infer_type(ctx, a)
                self.check(ctx, e, EMPTY)
                return self.eval(ctx, a)
            case Ann(e, a):
                self.infer_type(ctx, a)
                av = self.eval(ctx, a)
                self.check(ctx, e, av)
                return av
        self.fail("E-CONV", f"cannot infer {type(t).__name__}", ctx)

    def check_motive(self, ctx: Context, c: Term, av: Value, xv: Value, mod: Modality):
        if isinstance(c, Lam) and isinstance(c.body, Lam):
            c1 = ctx.extend(c.name, mod, av)
            c2 = c1.extend(c.body.name, mod, VEq(av, xv, fresh(len(ctx))))
            self.infer_type(c2, c.body.body)
            return
        ty = force(self.infer(ctx, c))
        y = fresh(len(ctx))
        if not (isinstance(ty, VPi) and ty.modality is mod
                and conv_type(self.sig, self.types(ctx), ty.dom, av)):
            self.fail("E-CONV", "bad motive", ctx)
        inner = force(ty.cod(y))
        if not (isinstance(inner, VPi) and inner.modality is mod
                and conv_type(self.sig, self.types(ctx) + (av,), inner.dom, VEq(av, xv, y))
                and isinstance(force(inner.cod(fresh(len(ctx) + 1))), VUniv)):
            self.fail("E-CONV", "bad motive", ctx)

    def check(self, ctx: Context, t: Term, ty: Value) -> None:
        ty = force(ty)
        match t:
            case Lam(body, name):
                if not isinstance(ty, VPi):
                    self.fail("E-CONV", "lambda at non-function type", ctx)
                self.check(ctx.extend(name, ty.modality, ty.dom), body, ty.cod(fresh(len(ctx))))
                return
            case Pair(a, b):
                if not isinstance(ty, VSigma):
                    self.fail("E-CONV", "pair at non-pair type", ctx)
                self.check(ctx, a, ty.dom)
                self.check(ctx, b, ty.cod(self.eval(ctx, a)))
                return
            case Refl():
                if not (isinstance(ty, VEq)
                        and convertible(self.sig, self.types(ctx), ty.type, ty.lhs, ty.rhs)):
                    self.fail("E-CONV", "refl at a non-reflexive type", ctx)
                return
        got = self.infer(ctx, t)
        if not conv_type(self.sig, self.types(ctx), got, ty):
            code = "E-UNIV" if isinstance(force(got), VUniv) and isinstance(ty, VUniv) else "E-CONV"
            self.fail(code, "type mismatch on re-check", ctx)

    def check_constant(self, const: Constant) -> None:
        self.level_vars = frozenset(const.level_params)
        self.infer_type(Context(), const.type)
        if const.body is not None:
            self.check(Context(), const.body, self.eval(Context(), const.type))
