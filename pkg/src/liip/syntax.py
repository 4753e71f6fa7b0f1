"""Message terms, modal formulas, parser/printer, and schema matching.

The surface language (ASCII):

    atoms        p, q, ...            propositional variables
    knowledge    k(A,T)               agent A knows term T
    terms        a | CM | "blob" | (T,T)
    connectives  ~  &  |  ->  <->     (precedence: ~ and modalities bind
                                       tightest, then &, |, ->, <->;
                                       -> associates to the right)
    modalities   [T]F   <T>F   box F
    constants    true   false

``true``, ``false``, ``<->``, ``box`` and ``<T>`` are surface macros; the
core formula type only has variables, knowledge atoms, & | ~ ->, and the
proof modality [T].  The proof modality is always verified by the
distinguished medium agent CM, so the surface syntax never names the
verifier.
"""
from __future__ import annotations

from dataclasses import dataclass, field


CM = "CM"  # name of the distinguished communication-medium agent


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------

class Term:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class Agent(Term):
    """An agent name used as a message term."""
    name: str


@dataclass(frozen=True, slots=True)
class Data(Term):
    """An opaque application data atom (written "..." in the surface syntax)."""
    name: str


@dataclass(frozen=True, slots=True)
class Pair(Term):
    fst: Term
    snd: Term


@dataclass(frozen=True, slots=True)
class MetaTerm(Term):
    """Schema metavariable ranging over arbitrary terms."""
    name: str


@dataclass(frozen=True, slots=True)
class MetaAgent(Term):
    """Schema metavariable ranging over agent-name terms only."""
    name: str


CM_TERM = Agent(CM)


def subterms(t: Term) -> frozenset[Term]:
    """All subterms of t, including t itself."""
    out: set[Term] = set()
    stack = [t]
    while stack:
        x = stack.pop()
        if x in out:
            continue
        out.add(x)
        if isinstance(x, Pair):
            stack.append(x.fst)
            stack.append(x.snd)
    return frozenset(out)


def term_key(t: Term):
    """Total structural order on terms, used wherever determinism matters."""
    if isinstance(t, Agent):
        return (0, t.name)
    if isinstance(t, Data):
        return (1, t.name)
    if isinstance(t, MetaAgent):
        return (2, t.name)
    if isinstance(t, MetaTerm):
        return (3, t.name)
    if isinstance(t, Pair):
        return (4, term_key(t.fst), term_key(t.snd))
    raise TypeError(f"not a term: {t!r}")


# ---------------------------------------------------------------------------
# Formulas
# ---------------------------------------------------------------------------

class Formula:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class Var(Formula):
    name: str


@dataclass(frozen=True, slots=True)
class Knows(Formula):
    """Knowledge atom k_agent(term); agent is Agent or (in schemas) MetaAgent."""
    agent: Term
    term: Term


@dataclass(frozen=True, slots=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class Not(Formula):
    operand: Formula


@dataclass(frozen=True, slots=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class Proves(Formula):
    """[term]body -- term can prove body to the medium CM."""
    term: Term
    body: Formula


@dataclass(frozen=True, slots=True)
class MetaFormula(Formula):
    """Schema metavariable ranging over arbitrary formulas."""
    name: str


TRUE = Knows(CM_TERM, CM_TERM)
FALSE = Not(TRUE)


def iff(a: Formula, b: Formula) -> Formula:
    return And(Implies(a, b), Implies(b, a))


def box(f: Formula) -> Formula:
    return Proves(CM_TERM, f)


def poss(t: Term, f: Formula) -> Formula:
    """<t>f, double negation of knowledge-conjoined truth."""
    return Not(Not(And(Knows(CM_TERM, t), f)))


def is_concrete(f: Formula) -> bool:
    """True when f contains no schema metavariables."""
    if isinstance(f, MetaFormula):
        return False
    if isinstance(f, Var):
        return True
    if isinstance(f, Knows):
        return not _term_has_meta(f.agent) and not _term_has_meta(f.term)
    if isinstance(f, Not):
        return is_concrete(f.operand)
    if isinstance(f, (And, Or, Implies)):
        return is_concrete(f.left) and is_concrete(f.right)
    if isinstance(f, Proves):
        return not _term_has_meta(f.term) and is_concrete(f.body)
    raise TypeError(f"not a formula: {f!r}")


def _term_has_meta(t: Term) -> bool:
    if isinstance(t, (MetaTerm, MetaAgent)):
        return True
    if isinstance(t, Pair):
        return _term_has_meta(t.fst) or _term_has_meta(t.snd)
    return False


def formula_key(f: Formula):
    if isinstance(f, Var):
        return (0, f.name)
    if isinstance(f, Knows):
        return (1, term_key(f.agent), term_key(f.term))
    if isinstance(f, MetaFormula):
        return (2, f.name)
    if isinstance(f, Not):
        return (3, formula_key(f.operand))
    if isinstance(f, And):
        return (4, formula_key(f.left), formula_key(f.right))
    if isinstance(f, Or):
        return (5, formula_key(f.left), formula_key(f.right))
    if isinstance(f, Implies):
        return (6, formula_key(f.left), formula_key(f.right))
    if isinstance(f, Proves):
        return (7, term_key(f.term), formula_key(f.body))
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# Subformulas and term collection
# ---------------------------------------------------------------------------

def proof_terms_of(f: Formula) -> frozenset[Term]:
    """All terms occurring under Proves or Knows in f, closed under subterms."""
    out: set[Term] = set()

    def walk(g: Formula) -> None:
        if isinstance(g, Knows):
            out.update(subterms(g.term))
        elif isinstance(g, Proves):
            out.update(subterms(g.term))
            walk(g.body)
        elif isinstance(g, Not):
            walk(g.operand)
        elif isinstance(g, (And, Or, Implies)):
            walk(g.left)
            walk(g.right)

    walk(f)
    return frozenset(out)


def subformula_closure(f: Formula) -> frozenset[Formula]:
    """Smallest set containing f, closed under immediate subformulas, and
    containing k_CM(M') for every subterm M' of a term that occurs under a
    modality or a knowledge atom in the set.

    The knowledge atoms are what lets a filtration through the closure fix
    the medium's knowledge per equivalence class, so the quotient is again a
    model; subterms are included because knowledge of a pair must stay
    coherent with knowledge of its components.
    """
    out: set[Formula] = set()
    work = [f]
    while work:
        g = work.pop()
        if g in out:
            continue
        out.add(g)
        if isinstance(g, (Var, MetaFormula)):
            continue
        if isinstance(g, Knows):
            for m in subterms(g.term):
                work.append(Knows(CM_TERM, m))
            continue
        if isinstance(g, Not):
            work.append(g.operand)
        elif isinstance(g, (And, Or, Implies)):
            work.append(g.left)
            work.append(g.right)
        elif isinstance(g, Proves):
            work.append(g.body)
            for m in subterms(g.term):
                work.append(Knows(CM_TERM, m))
        else:
            raise TypeError(f"not a formula: {g!r}")
    return frozenset(out)


# ---------------------------------------------------------------------------
# Schema matching and substitution
# ---------------------------------------------------------------------------

class MatchError(Exception):
    pass


@dataclass(frozen=True)
class SchemaInstantiation:
    """Bindings for a schema's metavariables.  Agent bindings are Agent
    terms, or MetaAgent terms when a schema is instantiated inside another
    schematic proof."""
    formulas: dict[str, Formula] = field(default_factory=dict)
    terms: dict[str, Term] = field(default_factory=dict)
    agents: dict[str, Term] = field(default_factory=dict)

    def merged_with(self, other: "SchemaInstantiation") -> "SchemaInstantiation":
        for mine, theirs in ((self.formulas, other.formulas),
                             (self.terms, other.terms),
                             (self.agents, other.agents)):
            for k, v in theirs.items():
                if k in mine and mine[k] != v:
                    raise MatchError(f"conflicting bindings for {k}")
        return SchemaInstantiation(
            {**self.formulas, **other.formulas},
            {**self.terms, **other.terms},
            {**self.agents, **other.agents},
        )


def match_term(pattern: Term, target: Term, inst: SchemaInstantiation) -> bool:
    if isinstance(pattern, MetaTerm):
        bound = inst.terms.get(pattern.name)
        if bound is None:
            inst.terms[pattern.name] = target
            return True
        return bound == target
    if isinstance(pattern, MetaAgent):
        if not isinstance(target, (Agent, MetaAgent)):
            return False
        bound = inst.agents.get(pattern.name)
        if bound is None:
            inst.agents[pattern.name] = target
            return True
        return bound == target
    if isinstance(pattern, Pair):
        return (isinstance(target, Pair)
                and match_term(pattern.fst, target.fst, inst)
                and match_term(pattern.snd, target.snd, inst))
    return pattern == target


def match_formula(pattern: Formula, target: Formula, inst: SchemaInstantiation) -> bool:
    if isinstance(pattern, MetaFormula):
        bound = inst.formulas.get(pattern.name)
        if bound is None:
            inst.formulas[pattern.name] = target
            return True
        return bound == target
    if isinstance(pattern, Var):
        return pattern == target
    if isinstance(pattern, Knows):
        return (isinstance(target, Knows)
                and match_term(pattern.agent, target.agent, inst)
                and match_term(pattern.term, target.term, inst))
    if isinstance(pattern, Not):
        return isinstance(target, Not) and match_formula(pattern.operand, target.operand, inst)
    if isinstance(pattern, (And, Or, Implies)):
        return (type(pattern) is type(target)
                and match_formula(pattern.left, target.left, inst)
                and match_formula(pattern.right, target.right, inst))
    if isinstance(pattern, Proves):
        return (isinstance(target, Proves)
                and match_term(pattern.term, target.term, inst)
                and match_formula(pattern.body, target.body, inst))
    raise TypeError(f"not a formula: {pattern!r}")


def match_schema(schema: Formula, target: Formula) -> SchemaInstantiation | None:
    """Most-general instantiation of schema's metavariables making it equal
    to target, or None.  Deterministic: metavariables bind on first
    occurrence, later occurrences must agree.
    """
    inst = SchemaInstantiation()
    if match_formula(schema, target, inst):
        return inst
    return None


def substitute_term(t: Term, inst: SchemaInstantiation) -> Term:
    if isinstance(t, MetaTerm):
        try:
            return inst.terms[t.name]
        except KeyError:
            raise MatchError(f"unbound term metavariable {t.name}") from None
    if isinstance(t, MetaAgent):
        try:
            return inst.agents[t.name]
        except KeyError:
            raise MatchError(f"unbound agent metavariable {t.name}") from None
    if isinstance(t, Pair):
        return Pair(substitute_term(t.fst, inst), substitute_term(t.snd, inst))
    return t


def substitute(f: Formula, inst: SchemaInstantiation) -> Formula:
    """Replace metavariables in f by their bindings (total: the language has
    no binders, so substitution is capture-free by construction)."""
    if isinstance(f, MetaFormula):
        try:
            return inst.formulas[f.name]
        except KeyError:
            raise MatchError(f"unbound formula metavariable {f.name}") from None
    if isinstance(f, Var):
        return f
    if isinstance(f, Knows):
        return Knows(substitute_term(f.agent, inst), substitute_term(f.term, inst))
    if isinstance(f, Not):
        return Not(substitute(f.operand, inst))
    if isinstance(f, (And, Or, Implies)):
        return type(f)(substitute(f.left, inst), substitute(f.right, inst))
    if isinstance(f, Proves):
        return Proves(substitute_term(f.term, inst), substitute(f.body, inst))
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

class LiipSyntaxError(Exception):
    def __init__(self, message: str, pos: int = -1):
        if pos >= 0:
            message = f"{message} (at position {pos})"
        super().__init__(message)
        self.pos = pos


_PUNCT = ("<->", "->", "(", ")", "[", "]", "<", ">", ",", "~", "&", "|",
          "{", "}", "=", ";", ".")

RESERVED = {"k", "true", "false", "box", CM}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    """Tokens are (kind, value, pos); kind is 'ident', 'string', or 'punct'."""
    toks: list[tuple[str, str, int]] = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c == '"':
            j = text.find('"', i + 1)
            if j < 0:
                raise LiipSyntaxError("unterminated string", i)
            toks.append(("string", text[i + 1:j], i))
            i = j + 1
            continue
        if c.isalnum() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] in "_'"):
                j += 1
            toks.append(("ident", text[i:j], i))
            i = j
            continue
        for p in _PUNCT:
            if text.startswith(p, i):
                toks.append(("punct", p, i))
                i += len(p)
                break
        else:
            raise LiipSyntaxError(f"unexpected character {c!r}", i)
    return toks


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MetaEnv:
    """Names to parse as metavariables (used by proof scripts; plain formula
    parsing uses the empty environment)."""
    formulas: frozenset[str] = frozenset()
    terms: frozenset[str] = frozenset()
    agents: frozenset[str] = frozenset()


EMPTY_ENV = MetaEnv()


class _Parser:
    def __init__(self, text: str, env: MetaEnv, known_agents: frozenset[str] | None):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.env = env
        self.known_agents = known_agents

    def peek(self) -> tuple[str, str, int] | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def next(self) -> tuple[str, str, int]:
        if self.i >= len(self.toks):
            raise LiipSyntaxError("unexpected end of input", len(self.text))
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, value: str) -> None:
        kind, val, pos = self.next()
        if val != value:
            raise LiipSyntaxError(f"expected {value!r}, found {val!r}", pos)

    def at(self, value: str) -> bool:
        t = self.peek()
        return t is not None and t[1] == value

    def eat(self, value: str) -> bool:
        if self.at(value):
            self.i += 1
            return True
        return False

    # -- terms --------------------------------------------------------------

    def term(self) -> Term:
        kind, val, pos = self.next()
        if kind == "string":
            if val == CM:
                raise LiipSyntaxError(f"{CM} used where disallowed: data atom"
                                      f" may not shadow the medium agent", pos)
            if not val:
                raise LiipSyntaxError("empty data atom", pos)
            return Data(val)
        if kind == "ident":
            return self._name_to_term(val, pos)
        if val == "(":
            fst = self.term()
            self.expect(",")
            snd = self.term()
            self.expect(")")
            return Pair(fst, snd)
        raise LiipSyntaxError(f"expected a term, found {val!r}", pos)

    def _name_to_term(self, name: str, pos: int) -> Term:
        if name == CM:
            return CM_TERM
        if name in RESERVED:
            raise LiipSyntaxError(f"reserved word {name!r} is not a term", pos)
        if name in self.env.terms:
            return MetaTerm(name)
        if name in self.env.agents:
            return MetaAgent(name)
        if name in self.env.formulas:
            raise LiipSyntaxError(f"formula metavariable {name!r} used as a term", pos)
        if self.known_agents is not None and name not in self.known_agents:
            raise LiipSyntaxError(f"unknown agent name {name!r}", pos)
        return Agent(name)

    def agent_term(self) -> Term:
        kind, val, pos = self.next()
        if kind != "ident":
            raise LiipSyntaxError(f"expected an agent name, found {val!r}", pos)
        t = self._name_to_term(val, pos)
        if not isinstance(t, (Agent, MetaAgent)):
            raise LiipSyntaxError(f"{val!r} is not an agent name", pos)
        return t

    # -- formulas (loosest binding first) ------------------------------------

    def formula(self) -> Formula:
        f = self.implies()
        while self.eat("<->"):
            f = iff(f, self.implies())
        return f

    def implies(self) -> Formula:
        left = self.disj()
        if self.eat("->"):
            return Implies(left, self.implies())
        return left

    def disj(self) -> Formula:
        f = self.conj()
        while self.eat("|"):
            f = Or(f, self.conj())
        return f

    def conj(self) -> Formula:
        f = self.unary()
        while self.eat("&"):
            f = And(f, self.unary())
        return f

    def unary(self) -> Formula:
        t = self.peek()
        if t is None:
            raise LiipSyntaxError("unexpected end of input", len(self.text))
        kind, val, pos = t
        if val == "~":
            self.next()
            return Not(self.unary())
        if val == "[":
            self.next()
            term = self.term()
            self.expect("]")
            return Proves(term, self.unary())
        if val == "<":
            self.next()
            term = self.term()
            self.expect(">")
            return poss(term, self.unary())
        if val == "box":
            self.next()
            return box(self.unary())
        return self.atom()

    def atom(self) -> Formula:
        kind, val, pos = self.next()
        if val == "(":
            f = self.formula()
            self.expect(")")
            return f
        if val == "true":
            return TRUE
        if val == "false":
            return FALSE
        if val == "k":
            self.expect("(")
            agent = self.agent_term()
            self.expect(",")
            term = self.term()
            self.expect(")")
            return Knows(agent, term)
        if kind == "ident":
            if val == CM:
                raise LiipSyntaxError(f"{CM} used where disallowed: not a formula", pos)
            if val in RESERVED:
                raise LiipSyntaxError(f"reserved word {val!r} is not a formula", pos)
            if val in self.env.formulas:
                return MetaFormula(val)
            if val in self.env.terms or val in self.env.agents:
                raise LiipSyntaxError(f"term metavariable {val!r} used as a formula", pos)
            return Var(val)
        raise LiipSyntaxError(f"expected a formula, found {val!r}", pos)


def parse_formula(text: str, env: MetaEnv = EMPTY_ENV,
                  agents: frozenset[str] | None = None) -> Formula:
    """Parse a formula; macros are expanded, so the result is a core formula.

    ``agents``, when given, restricts bare identifiers in term positions to
    that set (plus CM); by default any identifier is accepted as an agent
    name.
    """
    p = _Parser(text, env, agents)
    f = p.formula()
    t = p.peek()
    if t is not None:
        raise LiipSyntaxError(f"trailing input {t[1]!r}", t[2])
    return f


def parse_term(text: str, env: MetaEnv = EMPTY_ENV,
               agents: frozenset[str] | None = None) -> Term:
    p = _Parser(text, env, agents)
    t = p.term()
    tok = p.peek()
    if tok is not None:
        raise LiipSyntaxError(f"trailing input {tok[1]!r}", tok[2])
    return t


# ---------------------------------------------------------------------------
# Printer
# ---------------------------------------------------------------------------

def render_term(t: Term) -> str:
    if isinstance(t, (Agent, MetaTerm, MetaAgent)):
        return t.name
    if isinstance(t, Data):
        return f'"{t.name}"'
    if isinstance(t, Pair):
        return f"({render_term(t.fst)},{render_term(t.snd)})"
    raise TypeError(f"not a term: {t!r}")


# precedence levels: <-> 1, -> 2, | 3, & 4, unary 5
def render(f: Formula, sugar: bool = False) -> str:
    """Inverse of parse_formula: parse_formula(render(f, s)) == f for any s.

    With sugar=True, recognizable macro images print as true, false, <->,
    box and <T>.
    """
    return _render(f, 0, sugar)


def _render(f: Formula, parent: int, sugar: bool) -> str:
    if sugar:
        if f == TRUE:
            return "true"
        if f == FALSE:
            return "false"
        d = _match_poss(f)
        if d is not None:
            t, g = d
            return f"<{render_term(t)}>{_render(g, 5, sugar)}"
        if (isinstance(f, And) and isinstance(f.left, Implies)
                and isinstance(f.right, Implies)
                and f.left.left == f.right.right
                and f.left.right == f.right.left):
            s = f"{_render(f.left.left, 2, sugar)} <-> {_render(f.left.right, 2, sugar)}"
            return s if parent < 2 else f"({s})"
        if isinstance(f, Proves) and f.term == CM_TERM:
            return f"box {_render(f.body, 5, sugar)}"
    if isinstance(f, Var):
        return f.name
    if isinstance(f, MetaFormula):
        return f.name
    if isinstance(f, Knows):
        return f"k({render_term(f.agent)},{render_term(f.term)})"
    if isinstance(f, Not):
        return f"~{_render(f.operand, 5, sugar)}"
    if isinstance(f, Proves):
        return f"[{render_term(f.term)}]{_render(f.body, 5, sugar)}"
    if isinstance(f, And):
        s = f"{_render(f.left, 4, sugar)} & {_render(f.right, 5, sugar)}"
        return s if parent < 5 else f"({s})"
    if isinstance(f, Or):
        s = f"{_render(f.left, 3, sugar)} | {_render(f.right, 4, sugar)}"
        return s if parent < 4 else f"({s})"
    if isinstance(f, Implies):
        s = f"{_render(f.left, 3, sugar)} -> {_render(f.right, 2, sugar)}"
        return s if parent < 3 else f"({s})"
    raise TypeError(f"not a formula: {f!r}")


def _match_poss(f: Formula) -> tuple[Term, Formula] | None:
    if (isinstance(f, Not) and isinstance(f.operand, Not)
            and isinstance(f.operand.operand, And)):
        a = f.operand.operand
        if isinstance(a.left, Knows) and a.left.agent == CM_TERM:
            return a.left.term, a.right
    return None
