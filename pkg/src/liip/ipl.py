"""Intuitionistic propositional decision procedure.

Modal and knowledge subformulas are abstracted to fresh proposition letters
(skeletonization); that is sound because the logic is closed under
substitution of formulas for letters.  The propositional core is then
decided by a contraction-free sequent search in the style of G4ip: the left
implication rule is split by the shape of the antecedent, which makes the
search terminate without loop checking.
"""
from __future__ import annotations

from dataclasses import dataclass

from .syntax import (And, Formula, Implies, Knows, MetaFormula, Not, Or,
                     Proves, Var)


# ---------------------------------------------------------------------------
# Skeletons
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PropSkeleton:
    """A propositional formula plus the map from fresh atoms back to the
    maximal non-propositional subformulas they abstract."""
    formula: Formula
    abstraction: dict[str, Formula]


def skeletonize(f: Formula) -> PropSkeleton:
    skels, mapping = skeletonize_all([f])
    return PropSkeleton(skels[0], mapping)


def skeletonize_all(fs: list[Formula]) -> tuple[list[Formula], dict[str, Formula]]:
    """Skeletonize several formulas with one shared abstraction, so identical
    modal subformulas across them share one letter."""
    mapping: dict[str, Formula] = {}
    inverse: dict[Formula, str] = {}

    def fresh(g: Formula) -> Formula:
        name = inverse.get(g)
        if name is None:
            name = f"#{len(mapping)}"
            mapping[name] = g
            inverse[g] = name
        return Var(name)

    def walk(g: Formula) -> Formula:
        if isinstance(g, Var):
            return g
        if isinstance(g, (Knows, Proves, MetaFormula)):
            return fresh(g)
        if isinstance(g, Not):
            return Not(walk(g.operand))
        if isinstance(g, (And, Or, Implies)):
            return type(g)(walk(g.left), walk(g.right))
        raise TypeError(f"not a formula: {g!r}")

    return [walk(f) for f in fs], mapping


def unskeletonize(f: Formula, mapping: dict[str, Formula]) -> Formula:
    if isinstance(f, Var):
        return mapping.get(f.name, f)
    if isinstance(f, Not):
        return Not(unskeletonize(f.operand, mapping))
    if isinstance(f, (And, Or, Implies)):
        return type(f)(unskeletonize(f.left, mapping),
                       unskeletonize(f.right, mapping))
    return f


# ---------------------------------------------------------------------------
# Internal propositional syntax (with a real falsum)
# ---------------------------------------------------------------------------

# encoded as tuples: ("atom", name) | ("bot",) | ("and"|"or"|"imp", l, r)
BOT = ("bot",)


def _to_ipl(f: Formula):
    if isinstance(f, Var):
        return ("atom", f.name)
    if isinstance(f, Not):
        return ("imp", _to_ipl(f.operand), BOT)
    if isinstance(f, And):
        return ("and", _to_ipl(f.left), _to_ipl(f.right))
    if isinstance(f, Or):
        return ("or", _to_ipl(f.left), _to_ipl(f.right))
    if isinstance(f, Implies):
        return ("imp", _to_ipl(f.left), _to_ipl(f.right))
    raise TypeError(f"not propositional: {f!r}")


def _prove(gamma: frozenset, goal) -> bool:
    # Saturate the non-branching invertible left rules.
    ctx = set(gamma)
    changed = True
    while changed:
        changed = False
        if BOT in ctx:
            return True
        for f in sorted(ctx):
            tag = f[0]
            if tag == "and":
                ctx.discard(f)
                ctx.add(f[1])
                ctx.add(f[2])
                changed = True
            elif tag == "imp":
                ante, cons = f[1], f[2]
                if ante == BOT:
                    ctx.discard(f)
                    changed = True
                elif ante[0] == "atom" and ante in ctx:
                    ctx.discard(f)
                    ctx.add(cons)
                    changed = True
                elif ante[0] == "and":
                    ctx.discard(f)
                    ctx.add(("imp", ante[1], ("imp", ante[2], cons)))
                    changed = True
                elif ante[0] == "or":
                    ctx.discard(f)
                    ctx.add(("imp", ante[1], cons))
                    ctx.add(("imp", ante[2], cons))
                    changed = True
            if changed:
                break

    # Invertible right rules.
    if goal[0] == "and":
        return _prove(frozenset(ctx), goal[1]) and _prove(frozenset(ctx), goal[2])
    if goal[0] == "imp":
        return _prove(frozenset(ctx) | {goal[1]}, goal[2])

    # Axiom.
    if goal[0] == "atom" and goal in ctx:
        return True

    # Left disjunction: invertible, so the first candidate suffices.
    for f in sorted(ctx):
        if f[0] == "or":
            rest = frozenset(ctx) - {f}
            return (_prove(rest | {f[1]}, goal)
                    and _prove(rest | {f[2]}, goal))

    # Non-invertible choices, leftmost first.
    if goal[0] == "or":
        if _prove(frozenset(ctx), goal[1]) or _prove(frozenset(ctx), goal[2]):
            return True
    for f in sorted(ctx):
        if f[0] == "imp" and f[1][0] == "imp":
            (_, (_, c, d), b) = f
            rest = frozenset(ctx) - {f}
            if (_prove(rest | {("imp", d, b)}, ("imp", c, d))
                    and _prove(rest | {b}, goal)):
                return True
    return False


def ipl_entails(hyps: list[Formula], goal: Formula) -> bool:
    """Decide whether the conjunction of hyps intuitionistically entails
    goal.  Inputs must be propositional (skeletonize first)."""
    return _prove(frozenset(_to_ipl(h) for h in hyps), _to_ipl(goal))


def ipl_valid(f: Formula) -> bool:
    return ipl_entails([], f)
