"""Kernel syntax: universe levels, de Bruijn terms, modal contexts, substitution."""

from __future__ import annotations

import enum
from collections import ChainMap
from dataclasses import dataclass, field, replace
from typing import Iterator, Mapping


class Modality(enum.Enum):
    CRISP = "crisp"
    ORDINARY = "ordinary"

    @property
    def colon(self) -> str:
        return "::" if self is Modality.CRISP else ":"


CRISP = Modality.CRISP
ORDINARY = Modality.ORDINARY


# ---------------------------------------------------------------------------
# Universe levels


@dataclass(frozen=True, slots=True)
class Level:
    """``max(const, v1 + k1, ..., vn + kn)`` in canonical form.

    At most one offset per variable, sorted by variable name, and the constant
    is zeroed whenever some variable offset already bounds it from below.
    Under these rules two levels are equal for every assignment exactly when
    they are structurally equal.
    """

    const: int = 0
    vars: tuple[tuple[str, int], ...] = ()

    @staticmethod
    def of(const: int = 0, vars: Mapping[str, int] | None = None) -> "Level":
        vs = dict(vars or {})
        if vs and const <= max(vs.values()):
            const = 0
        return Level(const, tuple(sorted(vs.items())))

    @staticmethod
    def var(name: str) -> "Level":
        return Level(0, ((name, 0),))

    def suc(self, k: int = 1) -> "Level":
        return Level.of(self.const + k if self.const or not self.vars else 0,
                        {v: n + k for v, n in self.vars})

    def max(self, other: "Level") -> "Level":
        vs = dict(self.vars)
        for v, n in other.vars:
            vs[v] = max(vs.get(v, n), n)
        return Level.of(max(self.const, other.const), vs)

    def subst(self, env: Mapping[str, "Level"]) -> "Level":
        out = Level(self.const)
        for v, n in self.vars:
            out = out.max(env[v].suc(n) if v in env else Level(0, ((v, n),)))
        return out

    def evaluate(self, assignment: Mapping[str, int]) -> int:
        return max([self.const] + [assignment[v] + n for v, n in self.vars])

    @property
    def free(self) -> set[str]:
        return {v for v, _ in self.vars}

    def __str__(self) -> str:
        parts = [_suc_text(v, n) for v, n in self.vars]
        if self.const or not parts:
            parts.insert(0, str(self.const))
        out = parts[-1]
        for p in reversed(parts[:-1]):
            out = f"lmax {_paren(p)} {_paren(out)}"
        return out


def _suc_text(v: str, n: int) -> str:
    out = v
    for _ in range(n):
        out = f"lsuc {_paren(out)}"
    return out


def _paren(s: str) -> str:
    return f"({s})" if " " in s else s


# Raw level expressions, as written in source before normalization.


@dataclass(frozen=True)
class LZero:
    pass


@dataclass(frozen=True)
class LConst:
    n: int


@dataclass(frozen=True)
class LVar:
    name: str


@dataclass(frozen=True)
class LSuc:
    arg: "LevelExpr"


@dataclass(frozen=True)
class LMax:
    left: "LevelExpr"
    right: "LevelExpr"


LevelExpr = LZero | LConst | LVar | LSuc | LMax


def level_normalize(e: LevelExpr) -> Level:
    match e:
        case LZero():
            return Level()
        case LConst(n):
            return Level(n)
        case LVar(name):
            return Level.var(name)
        case LSuc(arg):
            return level_normalize(arg).suc()
        case LMax(a, b):
            return level_normalize(a).max(level_normalize(b))
    raise TypeError(f"not a level expression: {e!r}")


def level_eq(a: Level, b: Level) -> bool:
    return a == b


# ---------------------------------------------------------------------------
# Core terms. Binder names are printing hints only and do not take part in
# equality, so ``==`` is alpha-equivalence.


@dataclass(frozen=True, slots=True)
class Var:
    index: int


@dataclass(frozen=True, slots=True)
class Univ:
    level: Level


@dataclass(frozen=True, slots=True)
class Pi:
    modality: Modality
    dom: "Term"
    cod: "Term"
    name: str = field(default="_", compare=False)


@dataclass(frozen=True, slots=True)
class Lam:
    body: "Term"
    name: str = field(default="x", compare=False)


@dataclass(frozen=True, slots=True)
class App:
    fn: "Term"
    arg: "Term"


@dataclass(frozen=True, slots=True)
class Sigma:
    dom: "Term"
    cod: "Term"
    name: str = field(default="_", compare=False)


@dataclass(frozen=True, slots=True)
class Pair:
    fst: "Term"
    snd: "Term"


@dataclass(frozen=True, slots=True)
class Fst:
    arg: "Term"


@dataclass(frozen=True, slots=True)
class Snd:
    arg: "Term"


@dataclass(frozen=True, slots=True)
class Eq:
    type: "Term"
    lhs: "Term"
    rhs: "Term"


@dataclass(frozen=True, slots=True)
class Refl:
    pass


@dataclass(frozen=True, slots=True)
class J:
    """Identity elimination ``J A x C z y p``; ``crisp`` selects the crisp rule."""

    type: "Term"
    base_point: "Term"
    motive: "Term"
    base: "Term"
    end_point: "Term"
    path: "Term"
    crisp: bool = False


@dataclass(frozen=True, slots=True)
class UnitT:
    pass


@dataclass(frozen=True, slots=True)
class TT:
    pass


@dataclass(frozen=True, slots=True)
class EmptyT:
    pass


@dataclass(frozen=True, slots=True)
class Absurd:
    type: "Term"
    arg: "Term"


@dataclass(frozen=True, slots=True)
class Const:
    name: str
    levels: tuple[Level, ...] = ()


@dataclass(frozen=True, slots=True)
class Ann:
    term: "Term"
    type: "Term"


Term = (Var | Univ | Pi | Lam | App | Sigma | Pair | Fst | Snd | Eq | Refl | J
        | UnitT | TT | EmptyT | Absurd | Const | Ann)


def map_term(t: Term, f, depth: int = 0) -> Term:
    """Rebuild ``t`` bottom-up, calling ``f(var, depth)`` on every variable."""

    def go(t: Term, d: int) -> Term:
        match t:
            case Var():
                return f(t, d)
            case Pi(m, a, b, n):
                return Pi(m, go(a, d), go(b, d + 1), n)
            case Lam(b, n):
                return Lam(go(b, d + 1), n)
            case App(g, a):
                return App(go(g, d), go(a, d))
            case Sigma(a, b, n):
                return Sigma(go(a, d), go(b, d + 1), n)
            case Pair(a, b):
                return Pair(go(a, d), go(b, d))
            case Fst(a):
                return Fst(go(a, d))
            case Snd(a):
                return Snd(go(a, d))
            case Eq(a, x, y):
                return Eq(go(a, d), go(x, d), go(y, d))
            case J(a, x, c, z, y, p, crisp):
                return J(go(a, d), go(x, d), go(c, d), go(z, d), go(y, d),
                         go(p, d), crisp)
            case Absurd(a, e):
                return Absurd(go(a, d), go(e, d))
            case Ann(e, a):
                return Ann(go(e, d), go(a, d))
            case _:
                return t

    return go(t, depth)


def shift(t: Term, by: int, cutoff: int = 0) -> Term:
    if by == 0:
        return t

    def f(v: Var, d: int) -> Term:
        return Var(v.index + by) if v.index >= cutoff + d else v

    return map_term(t, f)


def substitute(t: Term, a: Term, index: int = 0) -> Term:
    """``t[a/index]``: replace the variable ``index`` and close the gap."""

    def f(v: Var, d: int) -> Term:
        i = v.index
        if i == index + d:
            return shift(a, d)
        if i > index + d:
            return Var(i - 1)
        return v

    return map_term(t, f)


def free_vars(t: Term) -> set[int]:
    out: set[int] = set()

    def f(v: Var, d: int) -> Term:
        if v.index >= d:
            out.add(v.index - d)
        return v

    map_term(t, f)
    return out


def subterms(t: Term) -> Iterator[tuple[Term, int]]:
    """Every subterm with the number of binders above it, pre-order."""
    stack = [(t, 0)]
    while stack:
        t, d = stack.pop()
        yield t, d
        match t:
            case Pi(_, a, b) | Sigma(a, b):
                stack += [(b, d + 1), (a, d)]
            case Lam(b):
                stack.append((b, d + 1))
            case App(x, y) | Pair(x, y) | Absurd(x, y) | Ann(x, y):
                stack += [(y, d), (x, d)]
            case Fst(x) | Snd(x):
                stack.append((x, d))
            case Eq(a, x, y):
                stack += [(y, d), (x, d), (a, d)]
            case J(a, x, c, z, y, p):
                stack += [(p, d), (y, d), (z, d), (c, d), (x, d), (a, d)]


def instantiate_levels(t: Term, env: Mapping[str, Level]) -> Term:
    if not env:
        return t

    def go(t: Term) -> Term:
        match t:
            case Univ(lv):
                return Univ(lv.subst(env))
            case Const(n, lvs):
                return Const(n, tuple(lv.subst(env) for lv in lvs))
            case Var() | Refl() | UnitT() | TT() | EmptyT():
                return t
            case Pi(m, a, b, n):
                return Pi(m, go(a), go(b), n)
            case Lam(b, n):
                return Lam(go(b), n)
            case App(g, a):
                return App(go(g), go(a))
            case Sigma(a, b, n):
                return Sigma(go(a), go(b), n)
            case Pair(a, b):
                return Pair(go(a), go(b))
            case Fst(a):
                return Fst(go(a))
            case Snd(a):
                return Snd(go(a))
            case Eq(a, x, y):
                return Eq(go(a), go(x), go(y))
            case J(a, x, c, z, y, p, crisp):
                return J(go(a), go(x), go(c), go(z), go(y), go(p), crisp)
            case Absurd(a, e):
                return Absurd(go(a), go(e))
            case Ann(e, a):
                return Ann(go(e), go(a))
        raise TypeError(t)

    return go(t)


# ---------------------------------------------------------------------------
# Contexts


@dataclass(frozen=True, slots=True)
class Entry:
    name: str
    modality: Modality
    type: object
    accessible: bool = True


@dataclass(frozen=True, slots=True)
class Context:
    """A single telescope; entry ``k`` has de Bruijn level ``k``.

    The crisp zone and the local zone are the entries tagged ``CRISP`` and
    ``ORDINARY``.  Restriction keeps ordinary entries (indices stay valid) but
    makes them unusable.
    """

    entries: tuple[Entry, ...] = ()

    def __len__(self) -> int:
        return len(self.entries)

    def extend(self, name: str, modality: Modality, type: object) -> "Context":
        return Context(self.entries + (Entry(name, modality, type),))

    def entry(self, index: int) -> Entry:
        return self.entries[len(self.entries) - 1 - index]

    def lookup(self, name: str) -> int | None:
        for k in range(len(self.entries) - 1, -1, -1):
            if self.entries[k].name == name:
                return len(self.entries) - 1 - k
        return None


def restrict(ctx: Context) -> Context:
    return Context(tuple(
        replace(e, accessible=False) if e.modality is ORDINARY and e.accessible else e
        for e in ctx.entries))


# ---------------------------------------------------------------------------
# Signatures


@dataclass(eq=False)
class Constant:
    name: str
    level_params: tuple[str, ...]
    type: Term
    body: Term | None = None
    module: str = ""
    # evaluated type/body per level instantiation, filled in by conversion
    cache: dict = field(default_factory=dict, repr=False)

    @property
    def postulated(self) -> bool:
        return self.body is None


class Signature:
    """Constants visible to a module: its own, then those of its imports."""

    def __init__(self, imports=(), module: str = ""):
        self.module = module
        self.own: dict[str, Constant] = {}
        self.layers: list[dict[str, Constant]] = [self.own]
        for sig in imports:
            for layer in sig.layers:
                if not any(layer is seen for seen in self.layers):
                    self.layers.append(layer)
        self.table = ChainMap(*self.layers)

    def __contains__(self, name: str) -> bool:
        return name in self.table

    def __getitem__(self, name: str) -> Constant:
        return self.table[name]

    def get(self, name: str) -> Constant | None:
        return self.table.get(name)

    def add(self, const: Constant) -> None:
        if const.name in self.table:
            raise KeyError(const.name)
        const.module = const.module or self.module
        self.own[const.name] = const

    def __iter__(self):
        return iter(self.own.values())
