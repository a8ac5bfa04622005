from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from crispcheck.core import (
    CRISP, ORDINARY, App, Const, Context, Lam, Level, LConst, LMax, LSuc, LVar, LZero, Pi,
    Signature, Univ, UnitT, Var, free_vars, level_eq, level_normalize, restrict, shift,
    substitute,
)

from .oracles import ASSIGNMENTS, exhaustive_check, expressions, semantics


def L(e):
    return level_normalize(e)


# -- levels

def test_max_of_constants():
    assert L(LMax(LConst(1), LMax(LZero(), LZero()))) == Level(1)


def test_max_with_successor_absorbs():
    lv = L(LMax(LVar("l"), LSuc(LVar("l"))))
    assert lv == Level(0, (("l", 1),))
    assert str(lv) == "lsuc l"


def test_fibration_sort():
    # lmax 1 (lmax m n): the constant survives, both variables appear at offset 0
    lv = L(LMax(LConst(1), LMax(LVar("m"), LVar("n"))))
    assert lv == Level(1, (("m", 0), ("n", 0)))


def test_level_eq_examples():
    l = Level.var("l")
    assert level_eq(l, Level.var("l"))
    assert not level_eq(Level(1), Level(2))
    m, n = LVar("m"), LVar("n")
    assert level_eq(L(LMax(m, n)), L(LMax(n, m)))


def test_brute_force_on_examples():
    # lmax l (lsuc l) against its un-normalized form, l in 0..4
    e = LMax(LVar("l"), LSuc(LVar("l")))
    for l in range(5):
        assert L(e).evaluate({"l": l}) == l + 1


DEPTH3 = expressions(3)


def test_normalize_matches_brute_force_depth_3():
    for e in DEPTH3:
        lv = L(e)
        assert tuple(lv.evaluate(a) for a in ASSIGNMENTS) == semantics(e), e


def test_level_eq_partition_depth_3():
    # level_eq(normalize a, normalize b) holds exactly when a and b agree everywhere
    by_form, by_value = {}, {}
    for e in DEPTH3:
        by_form.setdefault(L(e), set()).add(e)
        by_value.setdefault(semantics(e), set()).add(e)
    assert {frozenset(s) for s in by_form.values()} == {frozenset(s) for s in by_value.values()}


def test_exhaustive_driver_depth_3():
    count, bad, collisions = exhaustive_check(3)
    assert (count, bad, collisions) == (1295, [], 0)


def test_depth_4_through_normal_forms():
    # normalization is compositional, so every depth-4 expression lands on
    # suc or max of two depth-3 normal forms; check all of those combinations
    forms = {}
    for e in DEPTH3:
        forms.setdefault(L(e), semantics(e))
    seen = dict(forms)
    for a, va in forms.items():
        r = a.suc()
        vr = tuple(x + 1 for x in va)
        assert tuple(r.evaluate(s) for s in ASSIGNMENTS) == vr
        assert seen.setdefault(r, vr) == vr
        for b, vb in forms.items():
            r = a.max(b)
            vr = tuple(map(max, va, vb))
            assert tuple(r.evaluate(s) for s in ASSIGNMENTS) == vr
            assert seen.setdefault(r, vr) == vr
    # distinct normal forms denote distinct functions
    assert len(set(seen.values())) == len(seen)


LEVELS = st.recursive(
    st.one_of(st.just(LZero()), st.integers(0, 3).map(LConst),
              st.sampled_from("lmn").map(LVar)),
    lambda sub: st.one_of(sub.map(LSuc), st.builds(LMax, sub, sub)),
    max_leaves=8)


@given(LEVELS, LEVELS, LEVELS)
def test_max_laws(a, b, c):
    a, b, c = L(a), L(b), L(c)
    assert a.max(b) == b.max(a)
    assert a.max(b.max(c)) == a.max(b).max(c)
    assert a.max(a) == a
    assert a.max(b).suc() == a.suc().max(b.suc())


# -- substitution

def test_substitute_identity_case():
    c = Const("c", ())
    assert substitute(Var(0), c, 0) == c


def test_substitute_under_binder_shifts():
    assert substitute(Lam(Var(1)), Var(0), 0) == Lam(Var(1))
    assert substitute(Lam(Var(1)), Var(3), 0) == Lam(shift(Var(3), 1))


def terms():
    return st.recursive(
        st.one_of(st.integers(0, 4).map(Var), st.just(Const("c", ())), st.just(UnitT())),
        lambda sub: st.one_of(st.builds(App, sub, sub), st.builds(Lam, sub),
                              st.builds(lambda a, b: Pi(ORDINARY, a, b), sub, sub)),
        max_leaves=12)


@given(terms(), st.integers(0, 3))
def test_shift_then_unshift(t, k):
    # substituting anything for a variable that does not occur undoes a shift
    assert substitute(shift(t, 1, k), Const("c", ()), k) == t


@given(terms(), terms())
def test_substitution_removes_the_variable(t, a):
    out = substitute(t, shift(a, 1), 0)
    assert free_vars(out) <= {i - 1 for i in free_vars(t) if i > 0} | free_vars(shift(a, 1))


# -- restriction

def test_restrict_example():
    ctx = Context().extend("A", CRISP, Univ(Level())).extend("x", ORDINARY, Var(0))
    r = restrict(ctx)
    assert [(e.name, e.modality, e.accessible) for e in r.entries] == [
        ("A", CRISP, True), ("x", ORDINARY, False)]


def test_restrict_empty():
    assert restrict(Context()) == Context()


CONTEXTS = st.lists(st.tuples(st.sampled_from("abcxyz"), st.sampled_from([CRISP, ORDINARY]),
                              st.booleans()), max_size=8)


def build(spec):
    ctx = Context()
    for name, mod, keep in spec:
        ctx = ctx.extend(name, mod, UnitT())
        if not keep:
            ctx = restrict(ctx)
    return ctx


@given(CONTEXTS)
def test_restrict_idempotent(spec):
    ctx = build(spec)
    assert restrict(restrict(ctx)) == restrict(ctx)


@given(CONTEXTS)
def test_restrict_monotone(spec):
    ctx = build(spec)
    r = restrict(ctx)
    assert len(r) == len(ctx)
    for before, after in zip(ctx.entries, r.entries):
        assert after.accessible <= before.accessible
        assert after.accessible == (before.accessible and before.modality is CRISP)


@given(CONTEXTS, st.sampled_from([CRISP, ORDINARY]))
def test_restrict_commutes_with_crisp_extension(spec, mod):
    ctx = build(spec)
    ext = restrict(ctx.extend("w", mod, UnitT()))
    assert ext.entries[:-1] == restrict(ctx).entries
    assert ext.entries[-1].accessible == (mod is CRISP)


def test_signature_rejects_duplicates():
    from crispcheck.core import Constant
    sig = Signature(module="m")
    sig.add(Constant("I", (), Univ(Level())))
    with pytest.raises(KeyError):
        sig.add(Constant("I", (), Univ(Level())))
    child = Signature([sig], "n")
    assert "I" in child and list(child) == []
