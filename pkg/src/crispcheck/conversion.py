"""Normalization by evaluation and type-directed definitional equality.

Values are in weak head normal form with closures for binders.  Crisp and
ordinary functions evaluate the same way; modality only matters to the
checker.  Postulates stay neutral.  A defined constant evaluates to a glued
value that remembers its head and spine and unfolds only when forced, so
conversion can compare unfolded definitions by their arguments first.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import (
    Absurd, Ann, App, Const, Constant, EmptyT, Eq, Fst, J, Lam, Level, Modality,
    Pair, Pi, Refl, Sigma, Signature, Snd, TT, Term, Univ, UnitT, Var,
    instantiate_levels,
)


class ConversionBug(Exception):
    """Raised when evaluation meets an ill-typed value (outside the contract)."""


# ---------------------------------------------------------------------------
# Values


@dataclass(frozen=True, slots=True)
class HVar:
    level: int


@dataclass(frozen=True, slots=True)
class HConst:
    name: str
    levels: tuple[Level, ...] = ()


@dataclass(frozen=True, slots=True)
class EApp:
    arg: "Value"


@dataclass(frozen=True, slots=True)
class EFst:
    pass


@dataclass(frozen=True, slots=True)
class ESnd:
    pass


@dataclass(frozen=True, slots=True)
class EJ:
    type: "Value"
    base_point: "Value"
    motive: "Value"
    base: "Value"
    end_point: "Value"
    crisp: bool


@dataclass(frozen=True, slots=True)
class EAbsurd:
    type: "Value"


Elim = EApp | EFst | ESnd | EJ | EAbsurd


@dataclass(frozen=True, slots=True)
class Closure:
    sig: Signature = field(repr=False)
    env: tuple
    body: Term

    def __call__(self, v: "Value") -> "Value":
        return evaluate(self.sig, self.env + (v,), self.body)


@dataclass(frozen=True, slots=True)
class VNeu:
    head: HVar | HConst
    spine: tuple[Elim, ...] = ()


@dataclass(frozen=True, slots=True)
class VUniv:
    level: Level


@dataclass(frozen=True, slots=True)
class VPi:
    modality: Modality
    dom: "Value"
    cod: Closure
    name: str = "_"


@dataclass(frozen=True, slots=True)
class VLam:
    body: Closure
    name: str = "x"


@dataclass(frozen=True, slots=True)
class VSigma:
    dom: "Value"
    cod: Closure
    name: str = "_"


@dataclass(frozen=True, slots=True)
class VPair:
    fst: "Value"
    snd: "Value"


@dataclass(frozen=True, slots=True)
class VEq:
    type: "Value"
    lhs: "Value"
    rhs: "Value"


@dataclass(frozen=True, slots=True)
class VRefl:
    pass


@dataclass(frozen=True, slots=True)
class VUnit:
    pass


@dataclass(frozen=True, slots=True)
class VTT:
    pass


@dataclass(frozen=True, slots=True)
class VEmpty:
    pass


class VGlued:
    """A defined constant applied to a spine, unfolded on demand."""

    __slots__ = ("head", "spine", "sig", "_forced")

    def __init__(self, head: HConst, spine: tuple, sig: Signature):
        self.head = head
        self.spine = spine
        self.sig = sig
        self._forced = None

    def __repr__(self) -> str:
        return f"VGlued({self.head!r}, {self.spine!r})"

    def extend(self, e: Elim) -> "VGlued":
        return VGlued(self.head, self.spine + (e,), self.sig)

    def unfolded(self) -> "Value":
        if self._forced is None:
            v = apply_spine(unfold(self.sig, self.head.name, self.head.levels), self.spine)
            self._forced = force(v)
        return self._forced


def force(v: "Value") -> "Value":
    """Unfold glued definitions until the head is visible."""
    return v.unfolded() if isinstance(v, VGlued) else v


Value = VGlued | VNeu | VUniv | VPi | VLam | VSigma | VPair | VEq | VRefl | VUnit | VTT | VEmpty

REFL, UNIT, TT_V, EMPTY = VRefl(), VUnit(), VTT(), VEmpty()


def fresh(level: int) -> VNeu:
    return VNeu(HVar(level))


def env_for(depth: int) -> tuple:
    """The identity environment: every context entry is its own variable."""
    return tuple(fresh(k) for k in range(depth))


# ---------------------------------------------------------------------------
# Evaluation


def _level_env(const: Constant, levels: tuple[Level, ...]) -> dict[str, Level]:
    if len(levels) != len(const.level_params):
        raise ConversionBug(f"{const.name} expects {len(const.level_params)} level(s)")
    return dict(zip(const.level_params, levels))


def const_type(sig: Signature, name: str, levels: tuple[Level, ...]) -> Value:
    const = sig[name]
    key = ("type", levels)
    if key not in const.cache:
        t = instantiate_levels(const.type, _level_env(const, levels))
        const.cache[key] = evaluate(sig, (), t)
    return const.cache[key]


def unfold(sig: Signature, name: str, levels: tuple[Level, ...]) -> Value:
    const = sig[name]
    if const.body is None:
        return VNeu(HConst(name, levels))
    key = ("body", levels)
    if key not in const.cache:
        t = instantiate_levels(const.body, _level_env(const, levels))
        const.cache[key] = evaluate(sig, (), t)
    return const.cache[key]


def evaluate(sig: Signature, env: tuple, t: Term) -> Value:
    match t:
        case Var(i):
            return env[len(env) - 1 - i]
        case App(f, a):
            return apply(evaluate(sig, env, f), evaluate(sig, env, a))
        case Lam(b, n):
            return VLam(Closure(sig, env, b), n)
        case Const(n, lvs):
            if sig[n].body is None:
                return VNeu(HConst(n, lvs))
            return VGlued(HConst(n, lvs), (), sig)
        case Pi(m, a, b, n):
            return VPi(m, evaluate(sig, env, a), Closure(sig, env, b), n)
        case Univ(lv):
            return VUniv(lv)
        case Sigma(a, b, n):
            return VSigma(evaluate(sig, env, a), Closure(sig, env, b), n)
        case Pair(a, b):
            return VPair(evaluate(sig, env, a), evaluate(sig, env, b))
        case Fst(a):
            return vfst(evaluate(sig, env, a))
        case Snd(a):
            return vsnd(evaluate(sig, env, a))
        case Eq(a, x, y):
            return VEq(evaluate(sig, env, a), evaluate(sig, env, x), evaluate(sig, env, y))
        case Refl():
            return REFL
        case J(a, x, c, z, y, p, crisp):
            return vj(evaluate(sig, env, a), evaluate(sig, env, x), evaluate(sig, env, c),
                      evaluate(sig, env, z), evaluate(sig, env, y), evaluate(sig, env, p), crisp)
        case UnitT():
            return UNIT
        case TT():
            return TT_V
        case EmptyT():
            return EMPTY
        case Absurd(a, e):
            ev = force(evaluate(sig, env, e))
            if not isinstance(ev, VNeu):
                raise ConversionBug("absurd applied to a non-neutral value")
            return VNeu(ev.head, ev.spine + (EAbsurd(evaluate(sig, env, a)),))
        case Ann(e, _):
            return evaluate(sig, env, e)
    raise ConversionBug(f"cannot evaluate {t!r}")


def apply(f: Value, a: Value) -> Value:
    if isinstance(f, VGlued):
        return f.extend(EApp(a))
    if isinstance(f, VLam):
        return f.body(a)
    if isinstance(f, VNeu):
        return VNeu(f.head, f.spine + (EApp(a),))
    raise ConversionBug(f"applying a non-function {type(f).__name__}")


def vfst(p: Value) -> Value:
    if isinstance(p, VGlued):
        return p.extend(EFst())
    if isinstance(p, VPair):
        return p.fst
    if isinstance(p, VNeu):
        return VNeu(p.head, p.spine + (EFst(),))
    raise ConversionBug(f"fst of {type(p).__name__}")


def vsnd(p: Value) -> Value:
    if isinstance(p, VGlued):
        return p.extend(ESnd())
    if isinstance(p, VPair):
        return p.snd
    if isinstance(p, VNeu):
        return VNeu(p.head, p.spine + (ESnd(),))
    raise ConversionBug(f"snd of {type(p).__name__}")


def vj(a: Value, x: Value, c: Value, z: Value, y: Value, p: Value, crisp: bool) -> Value:
    p = force(p)
    if isinstance(p, VRefl):
        return z
    if isinstance(p, VNeu):
        return VNeu(p.head, p.spine + (EJ(a, x, c, z, y, crisp),))
    raise ConversionBug(f"J on {type(p).__name__}")


def apply_spine(v: Value, spine) -> Value:
    for e in spine:
        match e:
            case EApp(a):
                v = apply(v, a)
            case EFst():
                v = vfst(v)
            case ESnd():
                v = vsnd(v)
            case EJ(a, x, c, z, y, crisp):
                v = vj(a, x, c, z, y, v, crisp)
            case EAbsurd(a):
                v = force(v)
                v = VNeu(v.head, v.spine + (e,))
    return v


# ---------------------------------------------------------------------------
# Read-back


def head_type(sig: Signature, types: tuple, head: HVar | HConst) -> Value:
    if isinstance(head, HVar):
        return types[head.level]
    return const_type(sig, head.name, head.levels)


def _head_term(depth: int, head: HVar | HConst) -> Term:
    if isinstance(head, HVar):
        return Var(depth - 1 - head.level)
    return Const(head.name, head.levels)


def readback(sig: Signature, depth: int, v: Value) -> Term:
    """Untyped read-back, no eta expansion; definitions are not unfolded."""
    if isinstance(v, VGlued):
        v = VNeu(v.head, v.spine)
    match v:
        case VNeu(head, spine):
            t = _head_term(depth, head)
            for e in spine:
                match e:
                    case EApp(a):
                        t = App(t, readback(sig, depth, a))
                    case EFst():
                        t = Fst(t)
                    case ESnd():
                        t = Snd(t)
                    case EJ(a, x, c, z, y, crisp):
                        t = J(readback(sig, depth, a), readback(sig, depth, x),
                              readback(sig, depth, c), readback(sig, depth, z),
                              readback(sig, depth, y), t, crisp)
                    case EAbsurd(a):
                        t = Absurd(readback(sig, depth, a), t)
            return t
        case VLam(body, n):
            return Lam(readback(sig, depth + 1, body(fresh(depth))), n)
        case VPi(m, a, b, n):
            return Pi(m, readback(sig, depth, a), readback(sig, depth + 1, b(fresh(depth))), n)
        case VSigma(a, b, n):
            return Sigma(readback(sig, depth, a), readback(sig, depth + 1, b(fresh(depth))), n)
        case VPair(a, b):
            return Pair(readback(sig, depth, a), readback(sig, depth, b))
        case VEq(a, x, y):
            return Eq(readback(sig, depth, a), readback(sig, depth, x), readback(sig, depth, y))
        case VUniv(lv):
            return Univ(lv)
        case VRefl():
            return Refl()
        case VUnit():
            return UnitT()
        case VTT():
            return TT()
        case VEmpty():
            return EmptyT()
    raise ConversionBug(f"cannot read back {v!r}")


def quote(sig: Signature, types: tuple, v: Value, ty: Value) -> Term:
    """Typed read-back: beta-normal and eta-long for functions, pairs and Unit."""
    depth = len(types)
    ty = force(ty)
    match ty:
        case VPi(_, dom, cod, n):
            x = fresh(depth)
            name = v.name if isinstance(v, VLam) else n
            return Lam(quote(sig, types + (dom,), apply(v, x), cod(x)), name)
        case VSigma(dom, cod):
            a = vfst(v)
            return Pair(quote(sig, types, a, dom), quote(sig, types, vsnd(v), cod(a)))
        case VUnit():
            return TT()
        case VUniv():
            return quote_type(sig, types, v)
    v = force(v)
    match v:
        case VRefl():
            return Refl()
        case VNeu():
            return _quote_neutral(sig, types, v)
    raise ConversionBug(f"value {type(v).__name__} does not inhabit {type(ty).__name__}")


def quote_type(sig: Signature, types: tuple, v: Value) -> Term:
    depth = len(types)
    v = force(v)
    match v:
        case VPi(m, a, b, n):
            return Pi(m, quote_type(sig, types, a),
                      quote_type(sig, types + (a,), b(fresh(depth))), n)
        case VSigma(a, b, n):
            return Sigma(quote_type(sig, types, a),
                         quote_type(sig, types + (a,), b(fresh(depth))), n)
        case VEq(a, x, y):
            return Eq(quote_type(sig, types, a), quote(sig, types, x, a), quote(sig, types, y, a))
        case VUniv(lv):
            return Univ(lv)
        case VUnit():
            return UnitT()
        case VEmpty():
            return EmptyT()
        case VNeu():
            return _quote_neutral(sig, types, v)
    raise ConversionBug(f"not a type: {type(v).__name__}")


def _quote_motive(sig: Signature, types: tuple, a: Value, x: Value, c: Value) -> Term:
    depth = len(types)
    y = fresh(depth)
    p = fresh(depth + 1)
    inner = types + (a, VEq(a, x, y))
    return Lam(Lam(quote_type(sig, inner, apply(apply(c, y), p)), "p"), "y")


def _quote_neutral(sig: Signature, types: tuple, v: VNeu) -> Term:
    depth = len(types)
    ty = head_type(sig, types, v.head)
    t = _head_term(depth, v.head)
    prefix: Value = VNeu(v.head)
    for e in v.spine:
        ty = force(ty)
        match e:
            case EApp(a):
                if not isinstance(ty, VPi):
                    raise ConversionBug("application of a neutral at non-function type")
                t = App(t, quote(sig, types, a, ty.dom))
                ty = ty.cod(a)
            case EFst():
                ty = ty.dom
                t = Fst(t)
            case ESnd():
                ty = ty.cod(vfst(prefix))
                t = Snd(t)
            case EJ(a, x, c, z, y, crisp):
                t = J(quote_type(sig, types, a), quote(sig, types, x, a),
                      _quote_motive(sig, types, a, x, c),
                      quote(sig, types, z, apply(apply(c, x), REFL)),
                      quote(sig, types, y, a), t, crisp)
                ty = apply(apply(c, y), prefix)
            case EAbsurd(a):
                t = Absurd(quote_type(sig, types, a), t)
                ty = a
        prefix = VNeu(v.head, prefix.spine + (e,))
    return t


def normalize(sig: Signature, types: tuple, t: Term, ty: Value) -> Term:
    return quote(sig, types, evaluate(sig, env_for(len(types)), t), ty)


# ---------------------------------------------------------------------------
# Definitional equality


def convertible(sig: Signature, types: tuple, ty: Value, a: Value, b: Value) -> bool:
    """Decide ``a = b : ty`` where ``types`` lists the context's entry types."""
    if a is b:
        return True
    depth = len(types)
    ty = force(ty)
    match ty:
        case VPi(_, dom, cod):
            x = fresh(depth)
            return convertible(sig, types + (dom,), cod(x), apply(a, x), apply(b, x))
        case VSigma(dom, cod):
            a1, b1 = vfst(a), vfst(b)
            return (convertible(sig, types, dom, a1, b1)
                    and convertible(sig, types, cod(a1), vsnd(a), vsnd(b)))
        case VUnit():
            return True
        case VUniv():
            return conv_type(sig, types, a, b)
    if _same_glued(sig, types, a, b):
        return True
    a, b = force(a), force(b)
    if isinstance(a, VRefl) and isinstance(b, VRefl):
        return True
    if isinstance(a, VNeu) and isinstance(b, VNeu):
        return conv_neutral(sig, types, a, b)
    return False


def _same_glued(sig: Signature, types: tuple, a: Value, b: Value) -> bool:
    """Both sides unfold the same definition at convertible arguments."""
    return (isinstance(a, VGlued) and isinstance(b, VGlued) and a.head == b.head
            and conv_neutral(sig, types, VNeu(a.head, a.spine), VNeu(b.head, b.spine)))


def conv_type(sig: Signature, types: tuple, a: Value, b: Value) -> bool:
    if a is b:
        return True
    if _same_glued(sig, types, a, b):
        return True
    a, b = force(a), force(b)
    depth = len(types)
    match a, b:
        case VUniv(l1), VUniv(l2):
            return l1 == l2
        case VPi(m1, d1, c1), VPi(m2, d2, c2):
            if m1 is not m2 or not conv_type(sig, types, d1, d2):
                return False
            x = fresh(depth)
            return conv_type(sig, types + (d1,), c1(x), c2(x))
        case VSigma(d1, c1), VSigma(d2, c2):
            if not conv_type(sig, types, d1, d2):
                return False
            x = fresh(depth)
            return conv_type(sig, types + (d1,), c1(x), c2(x))
        case VEq(t1, x1, y1), VEq(t2, x2, y2):
            return (conv_type(sig, types, t1, t2) and convertible(sig, types, t1, x1, x2)
                    and convertible(sig, types, t1, y1, y2))
        case (VUnit(), VUnit()) | (VEmpty(), VEmpty()):
            return True
        case VNeu(), VNeu():
            return conv_neutral(sig, types, a, b)
    return False


def conv_neutral(sig: Signature, types: tuple, a: VNeu, b: VNeu) -> bool:
    if a.head != b.head or len(a.spine) != len(b.spine):
        return False
    depth = len(types)
    ty = head_type(sig, types, a.head)
    prefix: Value = VNeu(a.head)
    for e1, e2 in zip(a.spine, b.spine):
        ty = force(ty)
        match e1, e2:
            case EApp(x1), EApp(x2):
                if not isinstance(ty, VPi) or not convertible(sig, types, ty.dom, x1, x2):
                    return False
                ty = ty.cod(x1)
            case EFst(), EFst():
                ty = ty.dom
            case ESnd(), ESnd():
                ty = ty.cod(vfst(prefix))
            case EJ(t1, x1, c1, z1, y1, k1), EJ(t2, x2, c2, z2, y2, k2):
                if k1 != k2 or not conv_type(sig, types, t1, t2):
                    return False
                if not convertible(sig, types, t1, x1, x2):
                    return False
                y, p = fresh(depth), fresh(depth + 1)
                inner = types + (t1, VEq(t1, x1, y))
                if not conv_type(sig, inner, apply(apply(c1, y), p), apply(apply(c2, y), p)):
                    return False
                if not convertible(sig, types, apply(apply(c1, x1), REFL), z1, z2):
                    return False
                if not convertible(sig, types, t1, y1, y2):
                    return False
                ty = apply(apply(c1, y1), prefix)
            case EAbsurd(t1), EAbsurd(t2):
                if not conv_type(sig, types, t1, t2):
                    return False
                ty = t1
            case _:
                return False
        prefix = VNeu(a.head, prefix.spine + (e1,))
    return True
