"""Independent brute-force evaluators used as test oracles."""

from __future__ import annotations

import itertools

from crispcheck.core import LConst, LMax, LSuc, LVar, LZero, LevelExpr

VARS = ("l", "m", "n")
VALUES = range(5)
ASSIGNMENTS = [dict(zip(VARS, vs)) for vs in itertools.product(VALUES, repeat=len(VARS))]
LEAVES: tuple[LevelExpr, ...] = (LZero(), LConst(1), *(LVar(v) for v in VARS))


def eval_level(e: LevelExpr, env: dict[str, int]) -> int:
    """Direct recursive semantics of an unnormalized level expression."""
    match e:
        case LZero():
            return 0
        case LConst(n):
            return n
        case LVar(x):
            return env[x]
        case LSuc(a):
            return eval_level(a, env) + 1
        case LMax(a, b):
            return max(eval_level(a, env), eval_level(b, env))
    raise TypeError(e)


def semantics(e: LevelExpr) -> tuple[int, ...]:
    """The value of ``e`` under every assignment, as one vector."""
    return tuple(eval_level(e, env) for env in ASSIGNMENTS)


def expressions(depth: int) -> list[LevelExpr]:
    """Every level expression of depth at most ``depth`` over LEAVES."""
    layers = [list(LEAVES)]
    for _ in range(depth - 1):
        prev = layers[-1]
        layers.append(prev + [LSuc(a) for a in prev] + [LMax(a, b) for a in prev for b in prev])
    return layers[-1]


def exhaustive_check(depth: int = 4) -> tuple[int, list[LevelExpr], int]:
    """Normalize every expression of depth at most ``depth`` and compare it
    with brute-force evaluation.

    Returns the number of expressions, those whose normal form evaluates
    differently, and the number of semantically equal but structurally
    distinct normal forms (which would make ``level_eq`` incomplete).

    The top layer is never materialized as a list; brute-force vectors of
    the layer below are interned so each top-level expression costs one
    normalization and a table lookup.
    """
    from crispcheck.core import level_normalize

    below = expressions(depth - 1)
    ids: dict[tuple[int, ...], int] = {}
    vectors: list[tuple[int, ...]] = []

    def intern(vec):
        k = ids.get(vec)
        if k is None:
            k = ids[vec] = len(vectors)
            vectors.append(vec)
        return k

    sem = [intern(semantics(e)) for e in below]
    cache: dict = {}

    def observed(lv) -> int:
        k = cache.get(lv)
        if k is None:
            k = cache[lv] = intern(tuple(lv.evaluate(a) for a in ASSIGNMENTS))
        return k

    succ: dict[int, int] = {}
    join: dict[tuple[int, int], int] = {}
    bad: list[LevelExpr] = []
    count = 0
    for e, k in zip(below, sem):
        # the layer below is part of the set too
        count += 1
        if observed(level_normalize(e)) != k:
            bad.append(e)
    for a, ka in zip(below, sem):
        s = succ.get(ka)
        if s is None:
            s = succ[ka] = intern(tuple(x + 1 for x in vectors[ka]))
        e = LSuc(a)
        count += 1
        if observed(level_normalize(e)) != s:
            bad.append(e)
        for b, kb in zip(below, sem):
            m = join.get((ka, kb))
            if m is None:
                m = join[ka, kb] = intern(tuple(map(max, vectors[ka], vectors[kb])))
            e = LMax(a, b)
            count += 1
            if observed(level_normalize(e)) != m:
                bad.append(e)
    collisions = len(cache) - len(set(cache.values()))
    return count, bad, collisions
