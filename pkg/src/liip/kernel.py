"""Hilbert-style proof checking.

A proof script is a list of schematic formulas, each carried by one of the
kernel's justifications:

    axiom <name> [{x=..., ...}]     instance of a primitive axiom schema
    premise <k>                     the script's k-th premise
    mp <i> <j>                      modus ponens: line j is (line i) -> this
    ea <i>                          epistemic antitonicity: from
                                    k(CM,M) -> k(CM,M') conclude
                                    [M']f -> [M]f
    lemma <name> [{...}] [i, ...]   instance of a previously verified lemma,
                                    citing one line per lemma premise
    il [i | name[{...}], ...]       intuitionistic consequence of the cited
                                    lines and schema instances, decided by
                                    the propositional engine over the
                                    modal-atom skeleton
    defn <i>                        restates line i (macro images coincide
                                    after expansion, so this is equality)

Scripts may declare metavariables (``meta formula phi``), which makes a
checked script a schema; registering it in the lemma database makes it
citable by later scripts.
"""
from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field
from pathlib import Path

from .ipl import ipl_entails, skeletonize_all
from .syntax import (CM, CM_TERM, Agent, And, Formula, Implies, Knows,
                     LiipSyntaxError, MatchError, MetaAgent, MetaEnv,
                     MetaFormula, MetaTerm, Not, Or, Pair, Proves,
                     SchemaInstantiation, Term, Var, iff, match_formula,
                     parse_formula, parse_term, poss, render, substitute)


# ---------------------------------------------------------------------------
# Schemas
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Schema:
    """A statement schema: premises entail the conclusion, with declared
    metavariables (kind is 'formula', 'term' or 'agent')."""
    name: str
    meta_kinds: dict[str, str]
    premises: tuple[Formula, ...]
    conclusion: Formula

    @property
    def is_rule(self) -> bool:
        return bool(self.premises)


def _phi(n: str = "phi") -> MetaFormula:
    return MetaFormula(n)


def _axiom(name: str, conclusion: Formula, **kinds: str) -> Schema:
    return Schema(name, dict(kinds), (), conclusion)


_F, _G, _H = _phi("phi"), _phi("psi"), _phi("chi")
_M, _M2 = MetaTerm("M"), MetaTerm("M'")
_A = MetaAgent("a")

#: The primitive axiom schemas: the seven term/modal schemas plus a complete
#: intuitionistic propositional basis (the propositional engine subsumes the
#: basis for il steps, but scripts may cite the schemas individually).
AXIOMS: dict[str, Schema] = {
    s.name: s for s in [
        _axiom("own-name", Knows(_A, _A), a="agent"),
        _axiom("pairing",
               iff(And(Knows(_A, _M), Knows(_A, _M2)), Knows(_A, Pair(_M, _M2))),
               a="agent", **{"M": "term", "M'": "term"}),
        _axiom("self-knowledge", Proves(_M, Knows(CM_TERM, _M)), M="term"),
        _axiom("K",
               Implies(Proves(_M, Implies(_F, _G)),
                       Implies(Proves(_M, _F), Proves(_M, _G))),
               phi="formula", psi="formula", M="term"),
        _axiom("ET",
               Implies(Proves(_M, _F), Implies(Knows(CM_TERM, _M), _F)),
               phi="formula", M="term"),
        _axiom("ID",
               Implies(Proves(_M, _F), poss(_M, _F)),
               phi="formula", M="term"),
        _axiom("MM", Implies(_F, Proves(_M, _F)), phi="formula", M="term"),
        # intuitionistic propositional basis
        _axiom("then-1", Implies(_F, Implies(_G, _F)),
               phi="formula", psi="formula"),
        _axiom("then-2",
               Implies(Implies(_F, Implies(_G, _H)),
                       Implies(Implies(_F, _G), Implies(_F, _H))),
               phi="formula", psi="formula", chi="formula"),
        _axiom("and-intro", Implies(_F, Implies(_G, And(_F, _G))),
               phi="formula", psi="formula"),
        _axiom("and-elim-left", Implies(And(_F, _G), _F),
               phi="formula", psi="formula"),
        _axiom("and-elim-right", Implies(And(_F, _G), _G),
               phi="formula", psi="formula"),
        _axiom("or-intro-left", Implies(_F, Or(_F, _G)),
               phi="formula", psi="formula"),
        _axiom("or-intro-right", Implies(_G, Or(_F, _G)),
               phi="formula", psi="formula"),
        _axiom("or-elim",
               Implies(Implies(_F, _H),
                       Implies(Implies(_G, _H), Implies(Or(_F, _G), _H))),
               phi="formula", psi="formula", chi="formula"),
        _axiom("contradiction", Implies(Not(_F), Implies(_F, _G)),
               phi="formula", psi="formula"),
        _axiom("neg-intro",
               Implies(Implies(_F, _G), Implies(Implies(_F, Not(_G)), Not(_F))),
               phi="formula", psi="formula"),
    ]
}


# ---------------------------------------------------------------------------
# Justifications and scripts
# ---------------------------------------------------------------------------

RawBindings = tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class AxiomRef:
    name: str
    bindings: RawBindings = ()


@dataclass(frozen=True)
class PremiseRef:
    index: int


@dataclass(frozen=True)
class ModusPonens:
    antecedent: int
    implication: int


@dataclass(frozen=True)
class Antitonicity:
    line: int


@dataclass(frozen=True)
class LemmaRef:
    name: str
    bindings: RawBindings = ()
    cites: tuple[int, ...] = ()


@dataclass(frozen=True)
class SchemaRef:
    """A schema instance cited inside an il justification."""
    name: str
    bindings: RawBindings = ()


@dataclass(frozen=True)
class IL:
    refs: tuple[int | SchemaRef, ...] = ()


@dataclass(frozen=True)
class Defn:
    line: int


Justification = (AxiomRef | PremiseRef | ModusPonens | Antitonicity
                 | LemmaRef | IL | Defn)


@dataclass(frozen=True)
class ProofLine:
    formula: Formula
    justification: Justification


@dataclass(frozen=True)
class ProofScript:
    name: str
    meta_kinds: dict[str, str]
    premises: tuple[Formula, ...]
    lines: tuple[ProofLine, ...]
    goal: Formula

    @property
    def env(self) -> MetaEnv:
        return _env_of(self.meta_kinds)

    def to_schema(self) -> Schema:
        return Schema(self.name, dict(self.meta_kinds), self.premises, self.goal)


def _env_of(meta_kinds: dict[str, str]) -> MetaEnv:
    return MetaEnv(
        formulas=frozenset(n for n, k in meta_kinds.items() if k == "formula"),
        terms=frozenset(n for n, k in meta_kinds.items() if k == "term"),
        agents=frozenset(n for n, k in meta_kinds.items() if k == "agent"),
    )


class LemmaDatabase:
    """Verified lemma schemas, citable by name.  Scripts are checked in
    dependency order, so registration order rules out cyclic citation."""

    def __init__(self) -> None:
        self._schemas: dict[str, Schema] = {}

    def register(self, schema: Schema) -> None:
        if schema.name in self._schemas or schema.name in AXIOMS:
            raise ValueError(f"name {schema.name!r} already registered")
        self._schemas[schema.name] = schema

    def get(self, name: str) -> Schema | None:
        return self._schemas.get(name)

    def names(self) -> list[str]:
        return list(self._schemas)

    def __contains__(self, name: str) -> bool:
        return name in self._schemas


# ---------------------------------------------------------------------------
# Script text format
# ---------------------------------------------------------------------------

def _split_top(text: str, sep: str) -> list[str]:
    """Split on sep outside (), [], {} and quotes."""
    parts, depth, cur, instr = [], 0, [], False
    for c in text:
        if instr:
            cur.append(c)
            if c == '"':
                instr = False
            continue
        if c == '"':
            instr = True
            cur.append(c)
        elif c in "([{":
            depth += 1
            cur.append(c)
        elif c in ")]}":
            depth -= 1
            cur.append(c)
        elif c == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(c)
    parts.append("".join(cur))
    return parts


def _parse_bindings(text: str) -> RawBindings:
    text = text.strip()
    if not (text.startswith("{") and text.endswith("}")):
        raise LiipSyntaxError(f"bad bindings {text!r}")
    inner = text[1:-1].strip()
    if not inner:
        return ()
    out = []
    for part in _split_top(inner, ","):
        if "=" not in part:
            raise LiipSyntaxError(f"bad binding {part!r}")
        key, value = part.split("=", 1)
        out.append((key.strip(), value.strip()))
    return tuple(out)


def _split_name_bindings(text: str) -> tuple[str, RawBindings]:
    text = text.strip()
    if "{" in text:
        i = text.index("{")
        return text[:i].strip(), _parse_bindings(text[i:])
    return text, ()


def parse_justification(text: str) -> Justification:
    text = text.strip()
    head, _, rest = text.partition(" ")
    rest = rest.strip()
    if head == "axiom":
        name, bindings = _split_name_bindings(rest)
        if not name:
            raise LiipSyntaxError("axiom justification needs a name")
        return AxiomRef(name, bindings)
    if head == "premise":
        return PremiseRef(int(rest))
    if head == "mp":
        i, j = rest.split()
        return ModusPonens(int(i), int(j))
    if head == "ea":
        return Antitonicity(int(rest))
    if head == "lemma":
        brace = rest.index("{") if "{" in rest else len(rest)
        name_part = rest[:brace]
        toks = name_part.split(None, 1)
        name = toks[0] if toks else ""
        if not name:
            raise LiipSyntaxError("lemma justification needs a name")
        after_name = rest[len(name):].strip()
        bindings: RawBindings = ()
        if after_name.startswith("{"):
            close = after_name.index("}")
            bindings = _parse_bindings(after_name[:close + 1])
            after_name = after_name[close + 1:].strip()
        cites = tuple(int(p) for p in after_name.replace(",", " ").split())
        return LemmaRef(name, bindings, cites)
    if head == "il" or text == "il":
        refs: list[int | SchemaRef] = []
        if rest:
            for part in _split_top(rest, ","):
                part = part.strip()
                if not part:
                    continue
                if part.lstrip("-").isdigit():
                    refs.append(int(part))
                else:
                    name, bindings = _split_name_bindings(part)
                    refs.append(SchemaRef(name, bindings))
        return IL(tuple(refs))
    if head == "defn":
        return Defn(int(rest))
    raise LiipSyntaxError(f"unknown justification {text!r}")


def parse_script(text: str) -> ProofScript:
    """Parse a proof-script file: ``proof <name>``, optional ``meta`` and
    ``premise`` headers, numbered lines ``n. <formula> ; <justification>``,
    and a ``qed <formula>`` footer."""
    name: str | None = None
    meta_kinds: dict[str, str] = {}
    premises: list[Formula] = []
    lines: list[ProofLine] = []
    goal: Formula | None = None
    env = MetaEnv()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if goal is not None:
            raise LiipSyntaxError(f"line {lineno}: content after qed")
        if line.startswith("proof "):
            if name is not None:
                raise LiipSyntaxError(f"line {lineno}: duplicate proof header")
            name = line[len("proof "):].strip()
            continue
        if name is None:
            raise LiipSyntaxError(f"line {lineno}: expected 'proof <name>' first")
        if line.startswith("meta "):
            if premises or lines:
                raise LiipSyntaxError(f"line {lineno}: meta after premises or lines")
            parts = line.split()
            if len(parts) < 3 or parts[1] not in ("formula", "term", "agent"):
                raise LiipSyntaxError(f"line {lineno}: expected 'meta <kind> <names>'")
            for n in parts[2:]:
                if n in meta_kinds:
                    raise LiipSyntaxError(f"line {lineno}: duplicate metavariable {n}")
                meta_kinds[n] = parts[1]
            env = _env_of(meta_kinds)
            continue
        if line.startswith("premise "):
            if lines:
                raise LiipSyntaxError(f"line {lineno}: premise after numbered lines")
            premises.append(parse_formula(line[len("premise "):], env))
            continue
        if line.startswith("qed"):
            goal = parse_formula(line[len("qed"):], env)
            continue
        if "." not in line or ";" not in line:
            raise LiipSyntaxError(f"line {lineno}: expected 'n. <formula> ; <justification>'")
        num_text, rest = line.split(".", 1)
        try:
            num = int(num_text)
        except ValueError:
            raise LiipSyntaxError(f"line {lineno}: bad line number {num_text!r}") from None
        if num != len(lines) + 1:
            raise LiipSyntaxError(f"line {lineno}: expected line number {len(lines) + 1}")
        parts = _split_top(rest, ";")
        if len(parts) != 2:
            raise LiipSyntaxError(f"line {lineno}: expected one ';'")
        formula = parse_formula(parts[0], env)
        lines.append(ProofLine(formula, parse_justification(parts[1])))
    if name is None or goal is None:
        raise LiipSyntaxError("script needs a proof header and a qed footer")
    return ProofScript(name, meta_kinds, tuple(premises), tuple(lines), goal)


# ---------------------------------------------------------------------------
# Checking
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LineViolation:
    line: int
    rule: str
    message: str

    def __str__(self) -> str:
        return f"line {self.line} ({self.rule}): {self.message}"


@dataclass(frozen=True)
class ProofReport:
    script: ProofScript
    violations: tuple[LineViolation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.ok:
            return f"proof {self.script.name}: ok ({len(self.script.lines)} lines)"
        body = "\n".join(f"  {v}" for v in self.violations)
        return f"proof {self.script.name}: FAILED\n{body}"


def _resolve_schema(name: str, db: LemmaDatabase | None) -> Schema | None:
    if name in AXIOMS:
        return AXIOMS[name]
    return db.get(name) if db is not None else None


def _seed_instantiation(schema: Schema, bindings: RawBindings,
                        script: ProofScript) -> SchemaInstantiation:
    inst = SchemaInstantiation()
    env = script.env
    for key, value in bindings:
        kind = schema.meta_kinds.get(key)
        if kind is None:
            raise MatchError(f"{schema.name} has no metavariable {key!r}")
        if kind == "formula":
            inst.formulas[key] = parse_formula(value, env)
        elif kind == "term":
            inst.terms[key] = parse_term(value, env)
        else:
            t = parse_term(value, env)
            if not isinstance(t, (Agent, MetaAgent)):
                raise MatchError(f"binding for agent metavariable {key!r} "
                                 f"is not an agent name")
            inst.agents[key] = t
    return inst


def _default_fill(schema: Schema, inst: SchemaInstantiation,
                  script: ProofScript) -> None:
    """Identity-bind any leftover metavariable to the script's metavariable
    of the same name and kind (convenient for citing a law schematically)."""
    for n, kind in schema.meta_kinds.items():
        target = {"formula": inst.formulas, "term": inst.terms,
                  "agent": inst.agents}[kind]
        if n in target:
            continue
        if script.meta_kinds.get(n) != kind:
            raise MatchError(
                f"metavariable {n!r} of {schema.name} is unbound and the "
                f"script declares no matching metavariable")
        target[n] = {"formula": MetaFormula(n), "term": MetaTerm(n),
                     "agent": MetaAgent(n)}[kind]


def _instantiate_conclusion(schema: Schema, bindings: RawBindings,
                            script: ProofScript) -> Formula:
    if schema.is_rule:
        raise MatchError(f"{schema.name} has premises and cannot be cited "
                         f"as a plain instance here")
    inst = _seed_instantiation(schema, bindings, script)
    _default_fill(schema, inst, script)
    return substitute(schema.conclusion, inst)


def check_line(script: ProofScript, index: int,
               db: LemmaDatabase | None = None) -> LineViolation | None:
    """Check the 1-based line ``index``; earlier lines are assumed checked."""
    line = script.lines[index - 1]
    current = line.formula
    just = line.justification

    def bad(rule: str, message: str) -> LineViolation:
        return LineViolation(index, rule, message)

    def cited(i: int) -> Formula:
        if not (1 <= i < index):
            raise MatchError(f"cited line {i} does not precede line {index}")
        return script.lines[i - 1].formula

    try:
        if isinstance(just, AxiomRef):
            schema = AXIOMS.get(just.name)
            if schema is None:
                return bad("axiom", f"unknown axiom {just.name!r}")
            inst = _seed_instantiation(schema, just.bindings, script)
            if not match_formula(schema.conclusion, current, inst):
                return bad("axiom", f"line is not an instance of {just.name}")
            return None

        if isinstance(just, PremiseRef):
            k = just.index
            if not (1 <= k <= len(script.premises)):
                return bad("premise", f"no premise {k}")
            if script.premises[k - 1] != current:
                return bad("premise", f"line differs from premise {k}")
            return None

        if isinstance(just, ModusPonens):
            ante = cited(just.antecedent)
            imp = cited(just.implication)
            if imp != Implies(ante, current):
                return bad("mp", "cited line is not an implication of the "
                                 "cited antecedent and this line")
            return None

        if isinstance(just, Antitonicity):
            prem = cited(just.line)
            if not (isinstance(prem, Implies)
                    and isinstance(prem.left, Knows) and prem.left.agent == CM_TERM
                    and isinstance(prem.right, Knows) and prem.right.agent == CM_TERM):
                return bad("ea", "cited line is not of the shape "
                                 "k(CM,M) -> k(CM,M')")
            small, large = prem.left.term, prem.right.term
            if not (isinstance(current, Implies)
                    and isinstance(current.left, Proves)
                    and isinstance(current.right, Proves)
                    and current.left.term == large
                    and current.right.term == small
                    and current.left.body == current.right.body):
                return bad("ea", "conclusion must swap the cited terms over "
                                 "one proof body")
            return None

        if isinstance(just, LemmaRef):
            schema = db.get(just.name) if db is not None else None
            if schema is None:
                return bad("lemma", f"unknown or unverified lemma {just.name!r}")
            if len(just.cites) != len(schema.premises):
                return bad("lemma", f"{just.name} needs {len(schema.premises)} "
                                    f"cited premise lines, got {len(just.cites)}")
            inst = _seed_instantiation(schema, just.bindings, script)
            for prem_schema, i in zip(schema.premises, just.cites):
                if not match_formula(prem_schema, cited(i), inst):
                    return bad("lemma", f"line {i} does not match a premise "
                                        f"of {just.name}")
            if not match_formula(schema.conclusion, current, inst):
                return bad("lemma", f"line is not the matching conclusion "
                                    f"of {just.name}")
            return None

        if isinstance(just, IL):
            hyps: list[Formula] = []
            for ref in just.refs:
                if isinstance(ref, int):
                    hyps.append(cited(ref))
                else:
                    schema = _resolve_schema(ref.name, db)
                    if schema is None:
                        return bad("il", f"unknown schema {ref.name!r}")
                    hyps.append(_instantiate_conclusion(schema, ref.bindings,
                                                        script))
            skels, _ = skeletonize_all(hyps + [current])
            if not ipl_entails(skels[:-1], skels[-1]):
                return bad("il", "not an intuitionistic consequence of the "
                                 "cited lines")
            return None

        if isinstance(just, Defn):
            if cited(just.line) != current:
                return bad("defn", f"line differs from line {just.line} "
                                   f"after macro expansion")
            return None
    except MatchError as e:
        return bad(type(just).__name__.lower(), str(e))
    except LiipSyntaxError as e:
        return bad(type(just).__name__.lower(), f"bad binding syntax: {e}")

    return bad("?", f"unhandled justification {just!r}")


def check_proof(script: ProofScript,
                db: LemmaDatabase | None = None) -> ProofReport:
    violations = []
    for i in range(1, len(script.lines) + 1):
        v = check_line(script, i, db)
        if v is not None:
            violations.append(v)
    if not script.lines:
        violations.append(LineViolation(0, "structure", "empty proof"))
    elif script.lines[-1].formula != script.goal:
        violations.append(LineViolation(
            len(script.lines), "qed", "last line differs from the stated goal"))
    return ProofReport(script, tuple(violations))


def register(db: LemmaDatabase, script: ProofScript) -> Schema:
    """Register a checked script's statement as a citable lemma."""
    schema = script.to_schema()
    db.register(schema)
    return schema


# ---------------------------------------------------------------------------
# The bundled law corpus
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CorpusEntry:
    group: str          # structural | logical | corollary
    label: str          # catalogue index within the group, or a name
    title: str
    scripts: tuple[str, ...]
    line_counts: tuple[int, ...]
    ok: bool


@dataclass(frozen=True)
class CorpusReport:
    entries: tuple[CorpusEntry, ...]
    failure: ProofReport | None

    @property
    def ok(self) -> bool:
        return self.failure is None

    @property
    def verified_count(self) -> int:
        return sum(1 for e in self.entries if e.ok)

    def __str__(self) -> str:
        lines = [f"{e.group:11s} {e.label:>4s}  {e.title:34s} "
                 f"{'+'.join(str(c) for c in e.line_counts):>5s} lines  "
                 f"{'ok' if e.ok else 'FAILED'}"
                 for e in self.entries]
        lines.append(f"verified {self.verified_count} of {len(self.entries)} laws")
        if self.failure is not None:
            lines.append(str(self.failure))
        return "\n".join(lines)


def corpus_path() -> Path:
    return Path(str(importlib.resources.files("liip").joinpath("corpus")))


def load_manifest(corpus_dir: Path) -> list[tuple[str, str, str, list[str]]]:
    """Manifest lines: ``<group>:<label>:<title>:<file>[,<file>...]``."""
    entries = []
    text = (corpus_dir / "manifest").read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split(":")
        if len(parts) != 4:
            raise LiipSyntaxError(f"manifest line {lineno}: expected 4 fields")
        group, label, title, files = parts
        entries.append((group, label, title, files.split(",")))
    return entries


def run_corpus(corpus_dir: Path | str | None = None,
               db: LemmaDatabase | None = None
               ) -> tuple[CorpusReport, LemmaDatabase]:
    """Check every bundled law in catalogue order, registering each verified
    script as a lemma; the first failing law halts the run."""
    corpus = Path(corpus_dir) if corpus_dir is not None else corpus_path()
    if db is None:
        db = LemmaDatabase()
    entries: list[CorpusEntry] = []
    failure: ProofReport | None = None
    for group, label, title, files in load_manifest(corpus):
        counts = []
        ok = True
        for fname in files:
            if failure is not None:
                ok = False
                break
            script = parse_script((corpus / fname).read_text())
            report = check_proof(script, db)
            counts.append(len(script.lines))
            if report.ok:
                register(db, script)
            else:
                ok = False
                failure = report
        entries.append(CorpusEntry(group, label, title, tuple(files),
                                   tuple(counts), ok))
        if failure is not None:
            break
    return CorpusReport(tuple(entries), failure), db
