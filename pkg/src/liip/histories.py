"""Concrete semantics: input histories and the models they generate.

A state of the concrete semantics is a finite word of receive events.  The
medium CM sees every event; any other agent sees only its own.  From the
events an agent can see it derives data by pairing/unpairing, which fixes
the knowledge atoms, the state order (projection is a prefix of projection)
and the accessibility relations (reach an extension where the medium knows
the term in question).
"""
from __future__ import annotations

from dataclasses import dataclass

from . import semantics
from .derivation import derives
from .syntax import (CM, CM_TERM, Agent, Knows, Pair, Term, Var,
                     LiipSyntaxError, parse_term, render_term, subterms,
                     term_key)

Event = tuple[str, Term]


@dataclass(frozen=True, slots=True)
class History:
    """A finite input history; the empty history is the initial state."""
    events: tuple[Event, ...] = ()

    def receive(self, agent: str, payload: Term) -> "History":
        return History(self.events + ((agent, payload),))

    def concat(self, other: "History") -> "History":
        return History(self.events + other.events)

    def __len__(self) -> int:
        return len(self.events)

    def key(self):
        return (len(self.events),
                tuple((a, term_key(t)) for a, t in self.events))

    def __str__(self) -> str:
        if not self.events:
            return "0"
        return "; ".join(f"recv {a} {render_term(t)}" for a, t in self.events)


EMPTY = History()


def project(viewer: str, s: History) -> History:
    """The part of s the viewer can see: its own events, or all of them for CM."""
    if viewer == CM:
        return s
    return History(tuple(ev for ev in s.events if ev[0] == viewer))


def msgs(s: History) -> frozenset[Term]:
    """Raw payloads of a history, without any derivation closure."""
    return frozenset(t for _, t in s.events)


def knows_at(viewer: str, s: History, term: Term) -> bool:
    """Does the viewer's knowledge base at s contain term?"""
    return derives(viewer, msgs(project(viewer, s)), term)


def history_leq(viewer: str, s: History, s2: History) -> bool:
    """State preorder: the viewer's projection of s is a prefix of its
    projection of s2.  (Appending visible events is the only way a visible
    word extends, so the prefix test matches the concatenation definition.)
    """
    a = project(viewer, s).events
    b = project(viewer, s2).events
    return len(a) <= len(b) and b[:len(a)] == a


def history_equiv(viewer: str, s: History, s2: History) -> bool:
    """Equal viewer projections; for CM this is plain equality of histories."""
    return project(viewer, s) == project(viewer, s2)


def concrete_access(term: Term, s: History, s2: History) -> bool:
    """s reaches s2 for term: s2 extends s and the medium knows term at s2."""
    return history_leq(CM, s, s2) and knows_at(CM, s2, term)


# ---------------------------------------------------------------------------
# Finite concrete models
# ---------------------------------------------------------------------------

def _bundle(pool: list[Term]) -> Term:
    out = pool[-1]
    for t in reversed(pool[:-1]):
        out = Pair(t, out)
    return out


def generate_model(agents: frozenset[str] | set[str],
                   pool: frozenset[Term] | set[Term],
                   depth: int,
                   atom_valuation: dict[str, set[History]] | None = None
                   ) -> semantics.KripkeModel:
    """Finite restriction of the concrete model: all histories over
    agents x pool up to the given length, each with one omniscient sink
    appended (CM receives the pool bundled into one pair) so that every
    relation stays serial inside the restriction.

    atom_valuation maps propositional variable names to sets of histories;
    it is forced monotone by taking the upward closure along the order.
    """
    agents = frozenset(agents)
    if CM not in agents:
        raise ValueError(f"agent set must contain {CM}")
    pool_sorted = sorted(pool, key=term_key)
    if not pool_sorted and depth > 0:
        raise ValueError("empty pool with positive depth generates no events")
    if depth < 0:
        raise ValueError("depth must be >= 0")

    agent_order = sorted(agents)
    base: list[History] = [EMPTY]
    frontier = [EMPTY]
    for _ in range(depth):
        nxt = []
        for h in frontier:
            for a in agent_order:
                for t in pool_sorted:
                    nxt.append(h.receive(a, t))
        base.extend(nxt)
        frontier = nxt

    states: set[History] = set(base)
    if pool_sorted:
        sink_payload = _bundle(pool_sorted)
        for h in base:
            states.add(h.receive(CM, sink_payload))

    ordered = tuple(sorted(states, key=History.key))

    universe: set[Term] = {CM_TERM}
    for t in pool_sorted:
        universe |= subterms(t)

    order = frozenset((s, t) for s in ordered for t in ordered
                      if history_leq(CM, s, t))
    access = {
        m: frozenset((s, t) for (s, t) in order if knows_at(CM, t, m))
        for m in universe
    }

    valuation: dict[object, frozenset[History]] = {}
    for a in agent_order:
        for m in sorted(universe, key=term_key):
            valuation[Knows(Agent(a), m)] = frozenset(
                s for s in ordered if knows_at(a, s, m))
    if atom_valuation:
        for name in sorted(atom_valuation):
            marked = set(atom_valuation[name])
            valuation[Var(name)] = frozenset(
                t for t in ordered
                if any(history_leq(CM, s, t) for s in marked))

    return semantics.KripkeModel(
        states=ordered,
        agents=agents,
        universe=frozenset(universe),
        order=order,
        access=access,
        valuation=valuation,
    )


# ---------------------------------------------------------------------------
# Trace files
# ---------------------------------------------------------------------------

def parse_trace(text: str) -> History:
    """One event per line: ``recv <agent> <term>``; '#' starts a comment."""
    h = EMPTY
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split(None, 2)
        if len(parts) != 3 or parts[0] != "recv":
            raise LiipSyntaxError(f"line {lineno}: expected 'recv <agent> <term>'")
        _, agent, term_text = parts
        if not agent.isidentifier():
            raise LiipSyntaxError(f"line {lineno}: bad agent name {agent!r}")
        h = h.receive(agent, parse_term(term_text))
    return h
