"""Finite Kripke models, the semantic interface, satisfaction, filtration.

A model consists of a partially ordered finite state set, one accessibility
relation per term of a finite term universe, and a valuation for
propositional variables and knowledge atoms.  The accessibility family must
satisfy six conditions (the semantic interface): successors know the index
term; states knowing the term are reflexive; every relation is serial; every
relation refines the order, whose own relation is the order itself;
prefixing an order step never leaves a relation; and relations grow along
the derivability order of their index terms.  The intuitionistic connectives
are evaluated over order-upsets, the modality over accessibility successors.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping

from .derivation import derives
from .syntax import (CM, CM_TERM, Agent, And, Data, Formula, Implies, Knows,
                     LiipSyntaxError, Not, Or, Pair, Proves, Term, Var,
                     formula_key, parse_formula, render, render_term,
                     subformula_closure, subterms, term_key)

State = Hashable


class ModelError(Exception):
    """Evaluation outside the model's universes (unknown atom or term)."""


@dataclass(frozen=True)
class Violation:
    clause: str
    witness: str

    def __str__(self) -> str:
        return f"{self.clause}: {self.witness}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def passed(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.passed:
            return "model ok"
        return "\n".join(str(v) for v in self.violations)


class KripkeModel:
    """Immutable finite model; relations are stored extensionally.

    states     ordered tuple of hashable state ids
    agents     agent names (always including CM)
    universe   finite, subterm-closed term set containing the CM name
    order      the state partial order, as explicit pairs
    access     term -> relation, one entry per universe term
    valuation  atom formula (Var or Knows) -> set of states
    """

    def __init__(self, states: Iterable[State], agents: Iterable[str],
                 universe: Iterable[Term],
                 order: Iterable[tuple[State, State]],
                 access: Mapping[Term, Iterable[tuple[State, State]]],
                 valuation: Mapping[Formula, Iterable[State]]):
        self.states: tuple[State, ...] = tuple(states)
        self.agents: frozenset[str] = frozenset(agents)
        self.universe: frozenset[Term] = frozenset(universe)
        self.order: frozenset[tuple[State, State]] = frozenset(order)
        self.access: dict[Term, frozenset[tuple[State, State]]] = {
            t: frozenset(pairs) for t, pairs in access.items()}
        self.valuation: dict[Formula, frozenset[State]] = {
            atom: frozenset(ss) for atom, ss in valuation.items()}
        self._index = {s: i for i, s in enumerate(self.states)}
        up: dict[State, list[State]] = {s: [] for s in self.states}
        for s, t in sorted(self.order, key=self._pair_key):
            if s in up and t in self._index:
                up[s].append(t)
        self._upsets = {s: tuple(ts) for s, ts in up.items()}
        self._succ: dict[Term, dict[State, tuple[State, ...]]] = {}
        for term, rel in self.access.items():
            d: dict[State, list[State]] = {s: [] for s in self.states}
            for s, t in sorted(rel, key=self._pair_key):
                if s in d and t in self._index:
                    d[s].append(t)
            self._succ[term] = {s: tuple(ts) for s, ts in d.items()}
        self._truth: dict[Formula, frozenset[State]] = {}

    def _pair_key(self, pair: tuple[State, State]):
        return (self._index.get(pair[0], -1), self._index.get(pair[1], -1))

    def upset(self, s: State) -> tuple[State, ...]:
        return self._upsets[s]

    def successors(self, term: Term, s: State) -> tuple[State, ...]:
        try:
            return self._succ[term][s]
        except KeyError:
            raise ModelError(f"term {render_term(term)} outside model universe") from None

    def truth_set(self, f: Formula) -> frozenset[State]:
        """States where f is true, memoized per formula."""
        cached = self._truth.get(f)
        if cached is not None:
            return cached
        if isinstance(f, (Var, Knows)):
            try:
                out = self.valuation[f]
            except KeyError:
                raise ModelError(f"atom {render(f)} outside model universes") from None
        elif isinstance(f, And):
            out = self.truth_set(f.left) & self.truth_set(f.right)
        elif isinstance(f, Or):
            out = self.truth_set(f.left) | self.truth_set(f.right)
        elif isinstance(f, Not):
            sub = self.truth_set(f.operand)
            out = frozenset(s for s in self.states
                            if all(t not in sub for t in self.upset(s)))
        elif isinstance(f, Implies):
            left, right = self.truth_set(f.left), self.truth_set(f.right)
            out = frozenset(s for s in self.states
                            if all(t not in left or t in right
                                   for t in self.upset(s)))
        elif isinstance(f, Proves):
            if f.term not in self.access:
                raise ModelError(f"term {render_term(f.term)} outside model universe")
            body = self.truth_set(f.body)
            out = frozenset(s for s in self.states
                            if all(t in body for t in self.successors(f.term, s)))
        else:
            raise ModelError(f"cannot evaluate {f!r}")
        self._truth[f] = out
        return out


def satisfies(model: KripkeModel, state: State, f: Formula) -> bool:
    """Truth of f at state per the intuitionistic satisfaction relation."""
    if state not in model._index:
        raise ModelError(f"unknown state {state!r}")
    return state in model.truth_set(f)


def globally_true(model: KripkeModel, f: Formula) -> bool:
    return len(model.truth_set(f)) == len(model.states)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def _sname(model: KripkeModel, s: State) -> str:
    return str(s)


def validate_model(model: KripkeModel) -> ValidationReport:
    """Check the structural invariants and the six interface clauses,
    reporting every violated clause with a witness."""
    v: list[Violation] = []
    add = lambda clause, witness: v.append(Violation(clause, witness))
    states = model.states
    state_set = set(states)
    order = model.order

    if len(state_set) != len(states) or not states:
        add("states", "state list empty or contains duplicates")
        return ValidationReport(tuple(v))

    # -- universes and domains
    if CM_TERM not in model.universe:
        add("universe", f"universe lacks the medium name {CM}")
    for t in sorted(model.universe, key=term_key):
        if isinstance(t, Pair):
            if t.fst not in model.universe or t.snd not in model.universe:
                add("universe", f"universe not subterm-closed at {render_term(t)}")
    missing = sorted(model.universe - set(model.access), key=term_key)
    for t in missing:
        add("access-domain", f"no relation for universe term {render_term(t)}")
    extra = sorted(set(model.access) - model.universe, key=term_key)
    for t in extra:
        add("access-domain", f"relation for non-universe term {render_term(t)}")
    for s, t in sorted(order, key=model._pair_key):
        if s not in state_set or t not in state_set:
            add("order-domain", f"order pair over unknown states ({s}, {t})")
    for term in sorted(model.access, key=term_key):
        for s, t in sorted(model.access[term], key=model._pair_key):
            if s not in state_set or t not in state_set:
                add("access-domain",
                    f"relation for {render_term(term)} over unknown states ({s}, {t})")
    for atom in sorted(model.valuation, key=formula_key):
        if not isinstance(atom, (Var, Knows)):
            add("valuation-domain", f"valuation key {render(atom)} is not an atom")
            continue
        for s in model.valuation[atom]:
            if s not in state_set:
                add("valuation-domain", f"valuation of {render(atom)} at unknown state {s}")
        if isinstance(atom, Knows):
            if not isinstance(atom.agent, Agent) or atom.agent.name not in model.agents:
                add("valuation-domain", f"knowledge atom {render(atom)} for unknown agent")
            if atom.term not in model.universe:
                add("valuation-domain", f"knowledge atom {render(atom)} outside universe")
    for b in sorted(model.agents):
        for m in sorted(model.universe, key=term_key):
            if Knows(Agent(b), m) not in model.valuation:
                add("valuation-domain",
                    f"no valuation for knowledge atom k({b},{render_term(m)})")
    if v:
        return ValidationReport(tuple(v))  # interface checks need sane domains

    # -- order axioms
    for s in states:
        if (s, s) not in order:
            add("order-reflexive", f"missing ({s}, {s})")
    for s, t in order:
        if (t, s) in order and s != t:
            add("order-antisymmetric", f"cycle between {s} and {t}")
    for s, t in order:
        for u in model.upset(t):
            if (s, u) not in order:
                add("order-transitive", f"({s}, {t}) and ({t}, {u}) but not ({s}, {u})")

    # -- valuation monotonicity
    for atom in sorted(model.valuation, key=formula_key):
        marked = model.valuation[atom]
        for s in sorted(marked, key=model._index.get):
            for t in model.upset(s):
                if t not in marked:
                    add("valuation-monotone",
                        f"{render(atom)} true at {s} but not above it at {t}")

    # -- knowledge coherence
    for b in sorted(model.agents):
        own = Agent(b)
        if own in model.universe:
            have = model.valuation[Knows(own, own)]
            for s in states:
                if s not in have:
                    add("knowledge-own-name", f"k({b},{b}) false at {s}")
        for m in sorted(model.universe, key=term_key):
            if isinstance(m, Pair):
                whole = model.valuation[Knows(own, m)]
                parts = (model.valuation[Knows(own, m.fst)]
                         & model.valuation[Knows(own, m.snd)])
                for s in states:
                    if (s in whole) != (s in parts):
                        add("knowledge-pairing",
                            f"k({b},{render_term(m)}) incoherent with components at {s}")

    # -- interface clauses
    known = {m: model.valuation[Knows(CM_TERM, m)] for m in model.universe}
    for m in sorted(model.universe, key=term_key):
        rel = model.access[m]
        for s, t in sorted(rel, key=model._pair_key):
            if t not in known[m]:
                add("epistemic-image",
                    f"{s} reaches {t} for {render_term(m)} but k({CM},{render_term(m)}) fails there")
        for s in states:
            if s in known[m] and (s, s) not in rel:
                add("conditional-reflexivity",
                    f"k({CM},{render_term(m)}) holds at {s} but ({s}, {s}) missing for {render_term(m)}")
            if not model.successors(m, s):
                add("seriality", f"{s} has no successor for {render_term(m)}")
        for s, t in sorted(rel, key=model._pair_key):
            if (s, t) not in order:
                add("miar-inclusion",
                    f"({s}, {t}) for {render_term(m)} is not an order pair")
    if model.access.get(CM_TERM) != order:
        add("miar-inclusion", f"relation for {CM} differs from the state order")
    for m in sorted(model.universe, key=term_key):
        rel = model.access[m]
        for u, t in sorted(rel, key=model._pair_key):
            for s in states:
                if (s, u) in order and (s, t) not in rel:
                    add("special-transitivity",
                        f"({s}, {u}) in order and ({u}, {t}) for {render_term(m)} "
                        f"but ({s}, {t}) missing")
    for m in sorted(model.universe, key=term_key):
        for m2 in sorted(model.universe, key=term_key):
            if m != m2 and known[m] <= known[m2]:
                for pair in sorted(model.access[m] - model.access[m2],
                                   key=model._pair_key):
                    add("proof-monotonicity",
                        f"{render_term(m)} below {render_term(m2)} locally but "
                        f"pair ({pair[0]}, {pair[1]}) only in the smaller relation")
    return ValidationReport(tuple(v))


# ---------------------------------------------------------------------------
# Minimal filtration
# ---------------------------------------------------------------------------

def gamma_universe(gamma: Iterable[Formula]) -> frozenset[Term]:
    """Subterm-closed set of terms appearing in gamma, plus the CM name."""
    out: set[Term] = {CM_TERM}

    def walk(f: Formula) -> None:
        if isinstance(f, Knows):
            out.update(subterms(f.term))
        elif isinstance(f, Proves):
            out.update(subterms(f.term))
            walk(f.body)
        elif isinstance(f, Not):
            walk(f.operand)
        elif isinstance(f, (And, Or, Implies)):
            walk(f.left)
            walk(f.right)

    for f in gamma:
        walk(f)
    return frozenset(out)


def minimal_filtration(model: KripkeModel, gamma: Iterable[Formula]) -> KripkeModel:
    """Quotient of the model by agreement on gamma; see
    minimal_filtration_with_classes."""
    flt, _ = minimal_filtration_with_classes(model, gamma)
    return flt


def minimal_filtration_with_classes(
        model: KripkeModel, gamma: Iterable[Formula]
) -> tuple[KripkeModel, dict[State, str]]:
    """Filtration through a finite subformula-closed gamma.

    States of the quotient are classes of states agreeing on every member of
    gamma.  The class order is the smallest preorder containing the image of
    the state order; each relation is the image of the original relation
    pre-composed with the class order.  The raw image alone is not always
    transitive (two agreeing states may sit in unrelated branches), and the
    closure is harmless: gamma-truth is monotone state-wise, so it transfers
    along every added hop, and the last hop of a composed access edge is
    still an image edge, which is what the truth argument for the modality
    needs.  Knowledge atoms of the quotient are rebuilt from the
    gamma-determined ones by derivation, which keeps them coherent.

    Truth of every member of gamma is preserved at every class.
    """
    gamma = frozenset(gamma)
    for g in sorted(gamma, key=formula_key):
        missing = subformula_closure(g) - gamma
        if missing:
            bad = sorted(missing, key=formula_key)[0]
            raise ValueError(
                f"gamma is not subformula-closed: {render(g)} needs {render(bad)}")
    uni = gamma_universe(gamma)
    if not uni <= model.universe:
        bad = sorted(uni - model.universe, key=term_key)[0]
        raise ModelError(f"gamma term {render_term(bad)} outside model universe")

    gammas = sorted(gamma, key=formula_key)
    truth = {g: model.truth_set(g) for g in gammas}

    def profile(s: State) -> frozenset[Formula]:
        return frozenset(g for g in gammas if s in truth[g])

    classes: dict[frozenset[Formula], list[State]] = {}
    for s in model.states:
        classes.setdefault(profile(s), []).append(s)
    ordered_profiles = sorted(classes,
                              key=lambda p: model._index[classes[p][0]])
    cname = {p: f"c{i}" for i, p in enumerate(ordered_profiles)}
    of: dict[State, str] = {}
    for p, members in classes.items():
        for s in members:
            of[s] = cname[p]
    cstates = tuple(cname[p] for p in ordered_profiles)

    image_order = {(of[s], of[t]) for s, t in model.order}
    order_f = _transitive_closure(image_order, cstates)

    access_f: dict[Term, frozenset[tuple[str, str]]] = {}
    for m in sorted(uni, key=term_key):
        image = {(of[s], of[t]) for s, t in model.access[m]}
        composed = set(image)
        for c, c2 in order_f:
            for d, d2 in image:
                if d == c2:
                    composed.add((c, d2))
        access_f[m] = frozenset(composed)

    prof_of_class = {cname[p]: p for p in ordered_profiles}
    valuation_f: dict[Formula, frozenset[str]] = {}
    for g in gammas:
        if isinstance(g, Var):
            valuation_f[g] = frozenset(c for c in cstates
                                       if g in prof_of_class[c])
    for b in sorted(model.agents):
        for m in sorted(uni, key=term_key):
            atom = Knows(Agent(b), m)
            holds = []
            for c in cstates:
                base = frozenset(m2 for m2 in uni
                                 if Knows(Agent(b), m2) in prof_of_class[c])
                if derives(b, base, m):
                    holds.append(c)
            valuation_f[atom] = frozenset(holds)

    flt = KripkeModel(states=cstates, agents=model.agents, universe=uni,
                      order=order_f, access=access_f, valuation=valuation_f)
    return flt, of


def _transitive_closure(pairs: set[tuple], states: tuple) -> frozenset[tuple]:
    succ: dict[object, set] = {s: set() for s in states}
    for s, t in pairs:
        succ[s].add(t)
    changed = True
    while changed:
        changed = False
        for s in states:
            new = set()
            for t in succ[s]:
                new |= succ[t]
            if not new <= succ[s]:
                succ[s] |= new
                changed = True
    return frozenset((s, t) for s in states for t in succ[s])


# ---------------------------------------------------------------------------
# Model files
# ---------------------------------------------------------------------------

def load_model(text: str, validate: bool = True) -> KripkeModel:
    """Parse the structured text format:

        states s0 s1 ...
        order s t          (one pair per line; reflexive pairs are implied)
        access <term> s t  (one pair per line)
        val <atom> s ...   (atom is a variable or k(agent,term))

    '#' starts a comment.  The term universe is everything mentioned in
    access lines plus the CM name, closed under subterms.  By default the
    validator runs and a failed report raises ModelError.
    """
    states: list[str] = []
    order: set[tuple[str, str]] = set()
    access: dict[Term, set[tuple[str, str]]] = {}
    valuation: dict[Formula, set[str]] = {}
    seen_states = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kind = parts[0]
        if kind == "states":
            if seen_states:
                raise LiipSyntaxError(f"line {lineno}: duplicate states line")
            states = parts[1:]
            if len(set(states)) != len(states) or not states:
                raise LiipSyntaxError(f"line {lineno}: bad state list")
            seen_states = True
        elif kind == "order":
            if len(parts) != 3:
                raise LiipSyntaxError(f"line {lineno}: expected 'order s t'")
            order.add((parts[1], parts[2]))
        elif kind == "access":
            if len(parts) != 4:
                raise LiipSyntaxError(f"line {lineno}: expected 'access <term> s t'")
            term = parse_term(parts[1])
            access.setdefault(term, set()).add((parts[2], parts[3]))
        elif kind == "val":
            if len(parts) < 2:
                raise LiipSyntaxError(f"line {lineno}: expected 'val <atom> s ...'")
            atom = parse_formula(parts[1])
            if not isinstance(atom, (Var, Knows)):
                raise LiipSyntaxError(f"line {lineno}: {parts[1]} is not an atom")
            valuation.setdefault(atom, set()).update(parts[2:])
        else:
            raise LiipSyntaxError(f"line {lineno}: unknown directive {kind!r}")
    if not seen_states:
        raise LiipSyntaxError("model has no states line")

    universe: set[Term] = {CM_TERM}
    for t in access:
        universe |= subterms(t)
    for atom in valuation:
        if isinstance(atom, Knows):
            universe |= subterms(atom.term)
    for t in universe:
        access.setdefault(t, set())
    for s in states:
        order.add((s, s))

    agents = {CM} | {atom.agent.name for atom in valuation
                     if isinstance(atom, Knows) and isinstance(atom.agent, Agent)}
    for b in sorted(agents):
        for m in sorted(universe, key=term_key):
            valuation.setdefault(Knows(Agent(b), m), set())

    model = KripkeModel(states=states, agents=agents, universe=universe,
                        order=order, access=access, valuation=valuation)
    if validate:
        report = validate_model(model)
        if not report.passed:
            raise ModelError(f"model fails validation:\n{report}")
    return model


def serialize_model(model: KripkeModel) -> str:
    """Inverse of load_model, with stable state names.  States that are not
    plain identifiers (histories, say) are renamed h0, h1, ..."""
    def usable(s: State) -> bool:
        return isinstance(s, str) and s.isidentifier()

    if all(usable(s) for s in model.states):
        name = {s: s for s in model.states}
    else:
        name = {s: f"h{i}" for i, s in enumerate(model.states)}
    lines = ["states " + " ".join(name[s] for s in model.states)]
    for s, t in sorted(model.order, key=model._pair_key):
        if s != t:
            lines.append(f"order {name[s]} {name[t]}")
    for term in sorted(model.access, key=term_key):
        for s, t in sorted(model.access[term], key=model._pair_key):
            lines.append(f"access {render_term(term)} {name[s]} {name[t]}")
    for atom in sorted(model.valuation, key=formula_key):
        ss = sorted(model.valuation[atom], key=model._index.get)
        if ss:
            lines.append(f"val {render(atom)} " + " ".join(name[s] for s in ss))
    return "\n".join(lines) + "\n"
