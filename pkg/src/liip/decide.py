"""Bounded validity decision by countermodel search.

The interface conditions pin each accessibility relation exactly: the
conditional-reflexivity loops at states knowing the index term, composed
with order steps downward, force every pair (s, t) with s below t and t
knowing the term, and the image/inclusion clauses forbid anything more.  A
model is therefore determined by its order, its knowledge valuation and its
atom valuation, which keeps exhaustive enumeration at desk scale honest:
orders are enumerated as reflexive-transitive closures of Hasse edge sets in
lexicographic order, monotone valuations likewise, ties broken by state
index, so the first countermodel found is canonical and reproducible.

Validity verdicts are complete via the finite-model property: a formula
invalid anywhere is invalid in some model with at most 2**|closure(~f)|
states over the formula's own atoms, terms, and agents.  That bound is only
reachable for tiny closures; otherwise the verdict is an honest Unknown.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from .semantics import KripkeModel, satisfies, validate_model
from .syntax import (CM, CM_TERM, Agent, And, Formula, Implies, Knows, Not,
                     Or, Pair, Proves, Term, Var, proof_terms_of,
                     subformula_closure, term_key)


# ---------------------------------------------------------------------------
# Formula signature
# ---------------------------------------------------------------------------

def atoms_of(f: Formula) -> frozenset[str]:
    if isinstance(f, Var):
        return frozenset({f.name})
    if isinstance(f, Knows):
        return frozenset()
    if isinstance(f, Not):
        return atoms_of(f.operand)
    if isinstance(f, (And, Or, Implies)):
        return atoms_of(f.left) | atoms_of(f.right)
    if isinstance(f, Proves):
        return atoms_of(f.body)
    raise TypeError(f"not a concrete formula: {f!r}")


def agents_of(f: Formula) -> frozenset[str]:
    if isinstance(f, Knows):
        assert isinstance(f.agent, Agent)
        return frozenset({f.agent.name})
    if isinstance(f, Not):
        return agents_of(f.operand)
    if isinstance(f, (And, Or, Implies)):
        return agents_of(f.left) | agents_of(f.right)
    if isinstance(f, Proves):
        return agents_of(f.body)
    return frozenset()


# ---------------------------------------------------------------------------
# Canonical enumeration of validated models
# ---------------------------------------------------------------------------

def _posets(n: int):
    """All partial orders on n states: reflexive-transitive closures of
    Hasse edge sets, lexicographic, duplicates skipped by the uniqueness of
    the transitive reduction."""
    idx = list(range(n))
    slots = [(i, j) for i in idx for j in idx if i != j]
    for mask in range(1 << len(slots)):
        edges = {slots[b] for b in range(len(slots)) if mask >> b & 1}
        closure = {(i, i) for i in idx} | set(edges)
        changed = True
        while changed:
            changed = False
            for (a, b) in list(closure):
                for (c, d) in list(closure):
                    if b == c and (a, d) not in closure:
                        closure.add((a, d))
                        changed = True
        if any((j, i) in closure and i != j for (i, j) in closure):
            continue  # cycle
        strict = {(i, j) for (i, j) in closure if i != j}
        reduction = {(i, j) for (i, j) in strict
                     if not any((i, k) in strict and (k, j) in strict
                                for k in idx if k not in (i, j))}
        if reduction != edges:
            continue  # same poset already produced by its Hasse set
        yield frozenset(closure)


def _upclosed_sets(n: int, order: frozenset[tuple[int, int]]):
    """Upward-closed subsets of the poset, ascending in the bitmask order."""
    out = []
    for mask in range(1 << n):
        members = {i for i in range(n) if mask >> i & 1}
        if all(t in members for s in members for (s2, t) in order if s2 == s):
            out.append(frozenset(members))
    return out


def _leaves(universe: frozenset[Term]) -> list[Term]:
    return sorted((t for t in universe if not isinstance(t, Pair)),
                  key=term_key)


def _derivable(owner: str, base: frozenset[Term], term: Term) -> bool:
    if isinstance(term, Pair):
        return (_derivable(owner, base, term.fst)
                and _derivable(owner, base, term.snd))
    return term == Agent(owner) or term in base


def enumerate_models(atoms: frozenset[str], universe: frozenset[Term],
                     agents: frozenset[str], n: int):
    """Yield every validated model with exactly n states over the given
    atoms, (subterm-closed) term universe, and agent set, in canonical
    order.  States are named s0..s{n-1}.
    """
    atoms_sorted = sorted(atoms)
    agents_sorted = sorted(agents | {CM})
    universe = universe | {CM_TERM}
    uni_sorted = sorted(universe, key=term_key)
    leaves = [t for t in _leaves(universe) if t != CM_TERM]
    states = tuple(f"s{i}" for i in range(n))

    for order_idx in _posets(n):
        order = frozenset((states[i], states[j]) for (i, j) in order_idx)
        ups = _upclosed_sets(n, order_idx)
        # one up-closed leaf set per (agent, leaf); CM's own name is free
        per_agent_leaf = [(b, leaf) for b in agents_sorted for leaf in leaves
                          if leaf != Agent(b)]
        for choice in itertools.product(ups, repeat=len(per_agent_leaf)):
            base: dict[tuple[str, int], set[Term]] = {
                (b, i): set() for b in agents_sorted for i in range(n)}
            for (b, leaf), members in zip(per_agent_leaf, choice):
                for i in members:
                    base[(b, i)].add(leaf)
            knowledge = {
                (b, m): frozenset(
                    states[i] for i in range(n)
                    if _derivable(b, frozenset(base[(b, i)]), m))
                for b in agents_sorted for m in uni_sorted
            }
            # seriality: every state must see, above it, a knower of each term
            serial = all(
                all(any(t in knowledge[(CM, m)]
                        for (s2, t) in order if s2 == s)
                    for s in states)
                for m in uni_sorted
            )
            if not serial:
                continue
            access = {
                m: frozenset((s, t) for (s, t) in order
                             if t in knowledge[(CM, m)])
                for m in uni_sorted
            }
            for val_choice in itertools.product(ups, repeat=len(atoms_sorted)):
                valuation: dict[Formula, frozenset[str]] = {}
                for b in agents_sorted:
                    for m in uni_sorted:
                        valuation[Knows(Agent(b), m)] = knowledge[(b, m)]
                for name, members in zip(atoms_sorted, val_choice):
                    valuation[Var(name)] = frozenset(states[i] for i in members)
                yield KripkeModel(states=states, agents=agents_sorted,
                                  universe=universe, order=order,
                                  access=access, valuation=valuation)


# ---------------------------------------------------------------------------
# Search and verdicts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Valid:
    bound: int


@dataclass(frozen=True)
class Invalid:
    model: KripkeModel
    state: object


@dataclass(frozen=True)
class Unknown:
    bound: int


Verdict = Valid | Invalid | Unknown


def find_countermodel(f: Formula, max_states: int
                      ) -> tuple[KripkeModel, object] | None:
    """First validated model (canonical order, at most max_states states)
    and state falsifying f, or None.  The returned witness is re-checked
    against the validator and the satisfaction relation before it is
    reported."""
    if max_states < 1:
        raise ValueError("max_states must be >= 1")
    atoms = atoms_of(f)
    universe = proof_terms_of(f) | {CM_TERM}
    agents = agents_of(f) | {CM}
    for n in range(1, max_states + 1):
        for model in enumerate_models(atoms, universe, agents, n):
            truth = model.truth_set(f)
            if len(truth) < n:
                state = next(s for s in model.states if s not in truth)
                report = validate_model(model)
                if not report.passed:  # enumeration bug; never by design
                    raise AssertionError(
                        f"enumerated model fails validation:\n{report}")
                assert not satisfies(model, state, f)
                return model, state
    return None


def decide(f: Formula, max_states: int = 4) -> Verdict:
    """Invalid with a countermodel when one exists within the budget; Valid
    when the budget covers the finite-model bound 2**|closure(~f)|; Unknown
    otherwise.  Deterministic for a fixed budget."""
    found = find_countermodel(f, max_states)
    if found is not None:
        return Invalid(found[0], found[1])
    bound = 2 ** len(subformula_closure(Not(f)))
    if max_states >= bound:
        return Valid(bound)
    return Unknown(max_states)
