"""Message derivation: the pairing/unpairing closure of an agent's data.

An agent's knowledge base is the closure of its received data plus its own
name under pairing and unpairing.  The closure is infinite (pairing never
stops), so we keep only the unpair-saturated part and answer synthesis
queries by decomposing the goal: a term is derivable iff it is in the
saturation or is a pair of derivable terms.  That is complete because the
saturation already contains both components of every pair it contains.
"""
from __future__ import annotations

from dataclasses import dataclass

from .syntax import Agent, Pair, Term


def saturate(owner: str, seed: frozenset[Term] | set[Term]) -> frozenset[Term]:
    """Least superset of seed plus the owner's name closed under unpairing."""
    out: set[Term] = {Agent(owner)}
    work = list(seed)
    while work:
        t = work.pop()
        if t in out:
            continue
        out.add(t)
        if isinstance(t, Pair):
            work.append(t.fst)
            work.append(t.snd)
    return frozenset(out)


@dataclass(frozen=True)
class KnowledgeBase:
    """An agent's derivable data, represented by its unpair-saturation."""
    owner: str
    atoms: frozenset[Term]

    def derives(self, goal: Term) -> bool:
        if goal in self.atoms:
            return True
        if isinstance(goal, Pair):
            return self.derives(goal.fst) and self.derives(goal.snd)
        return False


def analyze(owner: str, seed: frozenset[Term] | set[Term]) -> KnowledgeBase:
    """Build the knowledge base for owner from a finite seed of received data."""
    return KnowledgeBase(owner, saturate(owner, seed))


def derives(owner: str, seed: frozenset[Term] | set[Term], goal: Term) -> bool:
    """True iff goal is in the pairing/unpairing closure of seed ∪ {owner}."""
    return analyze(owner, seed).derives(goal)


def term_leq(owner: str, small: Term, large: Term) -> bool:
    """Message preorder: everywhere the owner can derive small it can also
    derive large.  Equivalent to large being derivable from small alone:
    closure monotonicity gives one direction, and the state in which the
    owner has received exactly small gives the other.
    """
    return derives(owner, frozenset({small}), large)
