"""Concrete syntax of ``.ctt`` proof scripts: tokens, raw trees, parser, printer."""

from __future__ import annotations

import re
from dataclasses import dataclass, field, fields

Span = tuple[int, int]
NO_SPAN: Span = (0, 0)


class SyntaxProblem(Exception):
    def __init__(self, code: str, message: str, span: Span, expected: frozenset[str] = frozenset()):
        super().__init__(message)
        self.code = code
        self.message = message
        self.span = span
        self.expected = expected


# ---------------------------------------------------------------------------
# Lexing

KEYWORDS = frozenset({
    "postulate", "def", "import", "Set", "Lvl", "Eq", "refl", "J", "Jc",
    "Unit", "tt", "Empty", "absurd", "fst", "snd",
})

PUNCTUATION = {
    "::": "DCOLON", ":=": "DEFEQ", "->": "ARROW", "(": "LPAREN", ")": "RPAREN",
    ":": "COLON", "*": "STAR", "\\": "LAMBDA", ".": "DOT", ",": "COMMA",
}


@dataclass(frozen=True, slots=True)
class Token:
    kind: str
    lexeme: str
    span: Span

    @property
    def level(self) -> int | None:
        if self.kind == "SET":
            return int(self.lexeme[3:])
        if self.kind == "NUM":
            return int(self.lexeme)
        return None

    def __repr__(self) -> str:
        return f"{self.kind} {self.lexeme}" if self.kind in ("IDENT", "SET", "NUM") else self.kind


_LEXER = re.compile(rb"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>--[^\n]*)
  | (?P<punct>::|:=|->|[():*\\.,])
  | (?P<num>[0-9]+)
  | (?P<word>[A-Za-z_][A-Za-z0-9_']*)
""", re.VERBOSE)
_SET_N = re.compile(r"Set[0-9]")
_KEYWORD_KIND = {"Set": "SET_KW", "Jc": "JC"}


def tokenize(source: str | bytes) -> list[Token]:
    data = source.encode("utf-8") if isinstance(source, str) else source
    tokens: list[Token] = []
    pos = 0
    while pos < len(data):
        m = _LEXER.match(data, pos)
        if m is None:
            end = pos + 1
            while end < len(data) and (data[end] & 0xC0) == 0x80:
                end += 1
            bad = data[pos:end].decode("utf-8", errors="replace")
            raise SyntaxProblem("E-LEX", f"unexpected character {bad!r}", (pos, end))
        kind = m.lastgroup
        text = m.group().decode("ascii") if kind not in ("ws", "comment") else ""
        if kind == "punct":
            tokens.append(Token(PUNCTUATION[text], text, m.span()))
        elif kind == "num":
            tokens.append(Token("NUM", text, m.span()))
        elif kind == "word":
            if _SET_N.fullmatch(text):
                tokens.append(Token("SET", text, m.span()))
            elif text in KEYWORDS:
                tokens.append(Token(_KEYWORD_KIND.get(text, text.upper()), text, m.span()))
            else:
                tokens.append(Token("IDENT", text, m.span()))
        pos = m.end()
    return tokens


# ---------------------------------------------------------------------------
# Raw syntax. Spans are excluded from equality so ``==`` compares trees.


def _span() -> Span:
    return field(default=NO_SPAN, compare=False, repr=False)


@dataclass(frozen=True)
class RVar:
    name: str
    span: Span = _span()


@dataclass(frozen=True)
class RNum:
    value: int
    span: Span = _span()


@dataclass(frozen=True)
class RUniv:
    level: "Raw"
    span: Span = _span()


@dataclass(frozen=True)
class RPi:
    crisp: bool
    name: str
    dom: "Raw"
    cod: "Raw"
    span: Span = _span()


@dataclass(frozen=True)
class RLam:
    name: str
    body: "Raw"
    span: Span = _span()


@dataclass(frozen=True)
class RApp:
    fn: "Raw"
    arg: "Raw"
    span: Span = _span()


@dataclass(frozen=True)
class RSigma:
    name: str
    dom: "Raw"
    cod: "Raw"
    span: Span = _span()


@dataclass(frozen=True)
class RPair:
    fst: "Raw"
    snd: "Raw"
    span: Span = _span()


@dataclass(frozen=True)
class RFst:
    arg: "Raw"
    span: Span = _span()


@dataclass(frozen=True)
class RSnd:
    arg: "Raw"
    span: Span = _span()


@dataclass(frozen=True)
class REq:
    type: "Raw"
    lhs: "Raw"
    rhs: "Raw"
    span: Span = _span()


@dataclass(frozen=True)
class RRefl:
    span: Span = _span()


@dataclass(frozen=True)
class RJ:
    args: tuple["Raw", ...]
    crisp: bool = False
    span: Span = _span()


@dataclass(frozen=True)
class RUnit:
    span: Span = _span()


@dataclass(frozen=True)
class RTT:
    span: Span = _span()


@dataclass(frozen=True)
class REmpty:
    span: Span = _span()


@dataclass(frozen=True)
class RAbsurd:
    type: "Raw"
    arg: "Raw"
    span: Span = _span()


@dataclass(frozen=True)
class RAnn:
    term: "Raw"
    type: "Raw"
    span: Span = _span()


Raw = (RVar | RNum | RUniv | RPi | RLam | RApp | RSigma | RPair | RFst | RSnd
       | REq | RRefl | RJ | RUnit | RTT | REmpty | RAbsurd | RAnn)


def children(t: Raw) -> list[Raw]:
    out = []
    for f in fields(t):
        v = getattr(t, f.name)
        if isinstance(v, tuple) and f.name == "args":
            out.extend(v)
        elif f.name != "span" and hasattr(v, "span"):
            out.append(v)
    return out


@dataclass(frozen=True)
class RawDecl:
    kind: str  # "postulate" | "def" | "import"
    name: str
    level_params: tuple[str, ...] = ()
    type: Raw | None = None
    body: Raw | None = None
    span: Span = _span()
    name_span: Span = _span()


# ---------------------------------------------------------------------------
# Parsing

_ARITY = {"FST": 1, "SND": 1, "EQ": 3, "J": 6, "JC": 6, "ABSURD": 2, "SET_KW": 1}
_ATOM_START = {"IDENT", "NUM", "SET", "LPAREN", "REFL", "TT", "UNIT", "EMPTY"}
_HEAD_START = _ATOM_START | {"FST", "SND", "EQ", "J", "JC", "ABSURD", "SET_KW"}
_DECL_START = {"POSTULATE", "DEF", "IMPORT"}


class Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.pos = 0

    # token helpers

    def peek(self, k: int = 0) -> Token | None:
        i = self.pos + k
        return self.toks[i] if i < len(self.toks) else None

    def kind(self, k: int = 0) -> str:
        t = self.peek(k)
        return "EOF" if t is None else t.kind

    def eof_span(self) -> Span:
        if self.toks:
            end = self.toks[-1].span[1]
            return (end, end)
        return NO_SPAN

    def fail(self, expected: set[str], what: str | None = None):
        t = self.peek()
        got = "end of file" if t is None else repr(t.lexeme)
        exp = ", ".join(sorted(expected))
        raise SyntaxProblem("E-PARSE", what or f"expected {exp}, found {got}",
                            t.span if t else self.eof_span(), frozenset(expected))

    def expect(self, kind: str) -> Token:
        if self.kind() != kind:
            self.fail({kind})
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def accept(self, kind: str) -> Token | None:
        if self.kind() == kind:
            t = self.toks[self.pos]
            self.pos += 1
            return t
        return None

    # declarations

    def module(self) -> list[RawDecl]:
        decls = []
        while self.peek() is not None:
            decls.append(self.decl())
        return decls

    def decl(self) -> RawDecl:
        start = self.peek()
        if start is None or self.kind() not in _DECL_START:
            self.fail({"postulate", "def", "import"})
        self.pos += 1
        name_tok = self.expect("IDENT")
        if start.kind == "IMPORT":
            return RawDecl("import", name_tok.lexeme, span=(start.span[0], name_tok.span[1]),
                           name_span=name_tok.span)
        level_params: list[str] = []
        groups: list[tuple[bool, list[tuple[str, Span]], Raw, Span]] = []
        while self.kind() == "LPAREN":
            open_tok = self.expect("LPAREN")
            names = self.binder_names()
            if self.kind() == "COLON" and self.kind(1) == "LVL":
                self.pos += 2
                self.expect("RPAREN")
                if groups:
                    raise SyntaxProblem("E-PARSE", "level parameters must precede term parameters",
                                        open_tok.span, frozenset({"LPAREN"}))
                level_params += [n for n, _ in names]
                continue
            crisp = self.binder_colon()
            ty = self.term()
            close = self.expect("RPAREN")
            groups.append((crisp, names, ty, (open_tok.span[0], close.span[1])))
        self.expect("COLON")
        ty = self.term()
        body = None
        if start.kind == "DEF":
            self.expect("DEFEQ")
            body = self.term()
        end = self.toks[self.pos - 1].span[1]
        for crisp, names, dom, span in reversed(groups):
            for name, nspan in reversed(names):
                ty = RPi(crisp, name, dom, ty, (span[0], ty.span[1]))
                if body is not None:
                    body = RLam(name, body, (nspan[0], body.span[1]))
        return RawDecl(start.kind.lower(), name_tok.lexeme, tuple(level_params), ty, body,
                       (start.span[0], end), name_tok.span)

    def binder_names(self) -> list[tuple[str, Span]]:
        names = []
        while self.kind() == "IDENT":
            t = self.expect("IDENT")
            names.append((t.lexeme, t.span))
        if not names:
            self.fail({"IDENT"})
        return names

    def binder_colon(self) -> bool:
        if self.accept("DCOLON"):
            return True
        self.expect("COLON")
        return False

    # terms

    def term(self) -> Raw:
        if self.kind() == "LAMBDA":
            start = self.expect("LAMBDA")
            names = self.binder_names()
            self.expect("DOT")
            body = self.term()
            for name, _ in reversed(names):
                body = RLam(name, body, (start.span[0], body.span[1]))
            return body
        return self.arrow()

    def telescope(self) -> list[tuple[bool, list[tuple[str, Span]], Raw, Span]] | None:
        """Binder groups ``(x y : A) (z :: B)`` followed by ``->`` or ``*``.

        Returns None (with the position restored) when the parenthesised
        prefix is not a telescope, e.g. an annotation ``(x : A)``.
        """
        save = self.pos
        groups = []
        while (self.kind() == "LPAREN" and self.kind(1) == "IDENT"):
            k = 1
            while self.kind(k) == "IDENT":
                k += 1
            if self.kind(k) not in ("COLON", "DCOLON"):
                break
            open_tok = self.expect("LPAREN")
            names = self.binder_names()
            crisp = self.binder_colon()
            try:
                ty = self.term()
                close = self.expect("RPAREN")
            except SyntaxProblem:
                self.pos = save
                return None
            groups.append((crisp, names, ty, (open_tok.span[0], close.span[1])))
        if groups and self.kind() in ("ARROW", "STAR"):
            return groups
        self.pos = save
        return None

    def arrow(self) -> Raw:
        groups = self.telescope()
        if groups is not None and self.accept("ARROW"):
            return _bind(RPi, groups, self.term())
        if groups is not None:
            self.expect("STAR")
            left = _bind(RSigma, groups, self.sigma())
        else:
            left = self.sigma()
        if self.accept("ARROW"):
            cod = self.term()
            return RPi(False, "_", left, cod, (left.span[0], cod.span[1]))
        return left

    def sigma(self) -> Raw:
        groups = self.telescope()
        if groups is not None:
            if self.kind() == "ARROW":
                self.fail({"STAR"}, "a function type on the right of '*' needs parentheses")
            self.expect("STAR")
            return _bind(RSigma, groups, self.sigma())
        left = self.app()
        if self.accept("STAR"):
            right = self.sigma()
            return RSigma("_", left, right, (left.span[0], right.span[1]))
        return left

    def app(self) -> Raw:
        head = self.head()
        while self.kind() in _ATOM_START:
            arg = self.atom()
            head = RApp(head, arg, (head.span[0], arg.span[1]))
        return head

    def head(self) -> Raw:
        k = self.kind()
        if k in ("FST", "SND", "EQ", "J", "JC", "ABSURD", "SET_KW"):
            tok = self.toks[self.pos]
            self.pos += 1
            arity = _ARITY[k]
            args = []
            for _ in range(arity):
                if self.kind() not in _ATOM_START:
                    self.fail(_ATOM_START, f"'{tok.lexeme}' expects {arity} argument(s)")
                args.append(self.atom())
            span = (tok.span[0], args[-1].span[1])
            match k:
                case "FST":
                    return RFst(args[0], span)
                case "SND":
                    return RSnd(args[0], span)
                case "EQ":
                    return REq(*args, span)
                case "J" | "JC":
                    return RJ(tuple(args), k == "JC", span)
                case "ABSURD":
                    return RAbsurd(*args, span)
                case "SET_KW":
                    return RUniv(args[0], span)
        if k not in _ATOM_START:
            self.fail(_HEAD_START)
        return self.atom()

    def atom(self) -> Raw:
        t = self.peek()
        k = self.kind()
        if k == "IDENT":
            self.pos += 1
            return RVar(t.lexeme, t.span)
        if k == "NUM":
            self.pos += 1
            return RNum(int(t.lexeme), t.span)
        if k == "SET":
            self.pos += 1
            return RUniv(RNum(t.level, t.span), t.span)
        if k == "REFL":
            self.pos += 1
            return RRefl(t.span)
        if k == "TT":
            self.pos += 1
            return RTT(t.span)
        if k == "UNIT":
            self.pos += 1
            return RUnit(t.span)
        if k == "EMPTY":
            self.pos += 1
            return REmpty(t.span)
        if k == "LPAREN":
            open_tok = self.expect("LPAREN")
            inner = self.term()
            if self.accept("COMMA"):
                # (a, b, c) is (a, (b, c))
                items = [inner, self.term()]
                while self.accept("COMMA"):
                    items.append(self.term())
                close = self.expect("RPAREN")
                out = items[-1]
                for item in reversed(items[1:-1]):
                    out = RPair(item, out, (item.span[0], close.span[1]))
                return RPair(inner, out, (open_tok.span[0], close.span[1]))
            if self.accept("COLON"):
                ty = self.term()
                close = self.expect("RPAREN")
                return RAnn(inner, ty, (open_tok.span[0], close.span[1]))
            self.expect("RPAREN")
            return inner
        self.fail(_ATOM_START)


def _bind(node, groups, body: Raw) -> Raw:
    for crisp, names, dom, span in reversed(groups):
        for name, _ in reversed(names):
            if node is RPi:
                body = RPi(crisp, name, dom, body, (span[0], body.span[1]))
            elif crisp:
                raise SyntaxProblem("E-PARSE", "pair binders cannot be crisp", span,
                                    frozenset({"COLON"}))
            else:
                body = RSigma(name, dom, body, (span[0], body.span[1]))
    return body


def parse_module(tokens: list[Token]) -> list[RawDecl]:
    return Parser(tokens).module()


def parse_source(source: str | bytes) -> list[RawDecl]:
    return parse_module(tokenize(source))


def parse_term(source: str) -> Raw:
    p = Parser(tokenize(source))
    t = p.term()
    if p.peek() is not None:
        p.fail({"EOF"})
    return t


# ---------------------------------------------------------------------------
# Printing

TERM, SIGMA, APP, ATOM = range(4)


def _wrap(s: str, paren: bool) -> str:
    return f"({s})" if paren else s


def _left_operand(t: Raw) -> str:
    # ``(x : A) -> B`` would read back as a binder, not an annotation
    s = pretty(t, SIGMA if not isinstance(t, RSigma) else APP + 1)
    return f"({s})" if isinstance(t, RAnn) else s


def pretty(t, prec: int = TERM, names: list[str] | None = None) -> str:
    """Render a raw tree, or a core term when ``names`` gives the context."""
    if names is not None or not isinstance(t, Raw.__args__):
        t = core_to_raw(t, list(names or []))
    match t:
        case RVar(name):
            return name
        case RNum(n):
            return str(n)
        case RUniv(RNum(n)) if n <= 9:
            return f"Set{n}"
        case RUniv(lv):
            return _wrap(f"Set {pretty(lv, ATOM)}", prec > APP)
        case RPi(False, "_", dom, cod):
            dom_s = pretty(dom, SIGMA)
            if isinstance(dom, RAnn):
                dom_s = f"({dom_s})"
            return _wrap(f"{dom_s} -> {pretty(cod, TERM)}", prec > TERM)
        case RPi(crisp, name, dom, cod):
            colon = "::" if crisp else ":"
            return _wrap(f"({name} {colon} {pretty(dom)}) -> {pretty(cod, TERM)}", prec > TERM)
        case RSigma("_", dom, cod):
            dom_s = pretty(dom, APP)
            if isinstance(dom, RAnn):
                dom_s = f"({dom_s})"
            return _wrap(f"{dom_s} * {pretty(cod, SIGMA)}", prec > SIGMA)
        case RSigma(name, dom, cod):
            return _wrap(f"({name} : {pretty(dom)}) * {pretty(cod, SIGMA)}", prec > SIGMA)
        case RLam():
            names_, body = [], t
            while isinstance(body, RLam):
                names_.append(body.name)
                body = body.body
            return _wrap(f"\\{' '.join(names_)}. {pretty(body, TERM)}", prec > TERM)
        case RApp(fn, arg):
            return _wrap(f"{pretty(fn, APP)} {pretty(arg, ATOM)}", prec > APP)
        case RFst(a):
            return _wrap(f"fst {pretty(a, ATOM)}", prec > APP)
        case RSnd(a):
            return _wrap(f"snd {pretty(a, ATOM)}", prec > APP)
        case REq(a, x, y):
            return _wrap(f"Eq {pretty(a, ATOM)} {pretty(x, ATOM)} {pretty(y, ATOM)}", prec > APP)
        case RJ(args, crisp):
            head = "Jc" if crisp else "J"
            return _wrap(" ".join([head] + [pretty(a, ATOM) for a in args]), prec > APP)
        case RAbsurd(a, e):
            return _wrap(f"absurd {pretty(a, ATOM)} {pretty(e, ATOM)}", prec > APP)
        case RPair(a, b):
            return f"({pretty(a)} , {pretty(b)})"
        case RAnn(e, a):
            return f"({pretty(e)} : {pretty(a)})"
        case RRefl():
            return "refl"
        case RTT():
            return "tt"
        case RUnit():
            return "Unit"
        case REmpty():
            return "Empty"
    raise TypeError(f"cannot print {t!r}")


def pretty_decl(d: RawDecl) -> str:
    if d.kind == "import":
        return f"import {d.name}"
    head = f"{d.kind} {d.name}"
    if d.level_params:
        head += f" ({' '.join(d.level_params)} : Lvl)"
    out = f"{head} : {pretty(d.type)}"
    if d.body is not None:
        out += f" :=\n  {pretty(d.body)}"
    return out


def pretty_module(decls: list[RawDecl]) -> str:
    return "\n\n".join(pretty_decl(d) for d in decls) + "\n"


# ---------------------------------------------------------------------------
# Core terms back to raw trees, inventing names where hints collide.


def level_to_raw(lv) -> Raw:
    parts: list[Raw] = []
    for v, n in lv.vars:
        r: Raw = RVar(v)
        for _ in range(n):
            r = RApp(RVar("lsuc"), r)
        parts.append(r)
    if lv.const or not parts:
        parts.insert(0, RNum(lv.const))
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = RApp(RApp(RVar("lmax"), p), out)
    return out


def _fresh(hint: str, names: list[str]) -> str:
    base = hint.rstrip("0123456789") or "x"
    if hint not in names and hint != "_":
        return hint
    if base == "_":
        base = "x"
    k = 1
    while f"{base}{k}" in names:
        k += 1
    return f"{base}{k}"


def core_to_raw(t, names: list[str]) -> Raw:
    from . import core as c

    def go(t, names: list[str]) -> Raw:
        match t:
            case c.Var(i):
                return RVar(names[-1 - i] if i < len(names) else f"#{i}")
            case c.Univ(lv):
                return RUniv(level_to_raw(lv))
            case c.Const(n, lvs):
                out: Raw = RVar(n)
                for lv in lvs:
                    out = RApp(out, level_to_raw(lv))
                return out
            case c.Pi(m, a, b, hint):
                crisp = m is c.CRISP
                if not crisp and 0 not in c.free_vars(b):
                    return RPi(False, "_", go(a, names), go(b, names + ["_"]))
                x = _fresh(hint, names) if 0 in c.free_vars(b) else "_"
                return RPi(crisp, x, go(a, names), go(b, names + [x]))
            case c.Sigma(a, b, hint):
                if 0 not in c.free_vars(b):
                    return RSigma("_", go(a, names), go(b, names + ["_"]))
                x = _fresh(hint, names)
                return RSigma(x, go(a, names), go(b, names + [x]))
            case c.Lam(b, hint):
                x = _fresh(hint, names) if 0 in c.free_vars(b) else "_"
                return RLam(x, go(b, names + [x]))
            case c.App(f, a):
                return RApp(go(f, names), go(a, names))
            case c.Pair(a, b):
                return RPair(go(a, names), go(b, names))
            case c.Fst(a):
                return RFst(go(a, names))
            case c.Snd(a):
                return RSnd(go(a, names))
            case c.Eq(a, x, y):
                return REq(go(a, names), go(x, names), go(y, names))
            case c.Refl():
                return RRefl()
            case c.J(a, x, m, z, y, p, crisp):
                return RJ(tuple(go(u, names) for u in (a, x, m, z, y, p)), crisp)
            case c.UnitT():
                return RUnit()
            case c.TT():
                return RTT()
            case c.EmptyT():
                return REmpty()
            case c.Absurd(a, e):
                return RAbsurd(go(a, names), go(e, names))
            case c.Ann(e, a):
                return RAnn(go(e, names), go(a, names))
        raise TypeError(f"not a core term: {t!r}")

    return go(t, names)
