"""Probabilistic context-free grammars: file format, estimation from
treebanks, validation, sampling and head-word lexicalization.

Grammar file format (UTF-8)::

    # comment
    %start S                 (optional; default is the first LHS)
    S -> NP VP 1.0
    VP -> V NP 0.5 | V 0.5
    Det -> the | a           (no probabilities: uniform over the LHS)
    X -> <eps>               (epsilon rule)

A symbol is a nonterminal iff it occurs as some LHS. A trailing numeric
token on an alternative is read as its probability.
"""

from __future__ import annotations

import bisect
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .corpus import UNK, Tree, Treebank, Vocabulary
from .errors import FormatError, GrammarError

EPSILON_TOKENS = ("<eps>", "ε")
NORMALIZATION_TOLERANCE = 1e-6
_SLACK = 1e-12


class Rule(NamedTuple):
    lhs: str
    rhs: tuple[str, ...]
    prob: float

    def __str__(self):
        rhs = " ".join(self.rhs) if self.rhs else EPSILON_TOKENS[0]
        return f"{self.lhs} -> {rhs} {self.prob:.6f}"


@dataclass
class Diagnostics:
    residuals: dict[str, float] = field(default_factory=dict)
    unreachable: list[str] = field(default_factory=list)
    unproductive: list[str] = field(default_factory=list)
    epsilon_rules: list[Rule] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def max_residual(self) -> float:
        return max((abs(r) for r in self.residuals.values()), default=0.0)

    @property
    def clean(self) -> bool:
        return (
            self.max_residual() <= NORMALIZATION_TOLERANCE + _SLACK
            and not self.unreachable
            and not self.unproductive
            and not self.epsilon_rules
        )

    def lines(self) -> list[str]:
        out = []
        bad = {k: v for k, v in self.residuals.items() if abs(v) > 1e-9}
        if bad:
            out.append("normalization residuals: " + ", ".join(f"{k}={v:+.3g}" for k, v in sorted(bad.items())))
        if self.unreachable:
            out.append("unreachable: " + " ".join(self.unreachable))
        if self.unproductive:
            out.append("unproductive: " + " ".join(self.unproductive))
        if self.epsilon_rules:
            out.append(f"epsilon rules: {len(self.epsilon_rules)}")
        out.extend(self.notes)
        return out or ["clean"]


class Pcfg:
    """Weighted rewrite rules with a start symbol. Immutable by convention."""

    def __init__(self, start: str, rules: Iterable[Rule]):
        self.start = start
        self.rules: tuple[Rule, ...] = tuple(Rule(r[0], tuple(r[1]), float(r[2])) for r in rules)
        by_lhs: dict[str, list[Rule]] = defaultdict(list)
        for r in self.rules:
            by_lhs[r.lhs].append(r)
        self.by_lhs: dict[str, tuple[Rule, ...]] = {k: tuple(v) for k, v in by_lhs.items()}
        self.nonterminals: frozenset[str] = frozenset(self.by_lhs)
        self.terminals: frozenset[str] = frozenset(
            s for r in self.rules for s in r.rhs if s not in self.nonterminals
        )
        if start not in self.nonterminals:
            raise GrammarError(f"start symbol {start!r} has no rules")
        self.diagnostics: Diagnostics | None = None

    def __len__(self):
        return len(self.rules)

    def __repr__(self):
        return f"Pcfg(start={self.start!r}, {len(self.rules)} rules)"

    def prob(self, lhs: str, rhs: Sequence[str]) -> float:
        rhs = tuple(rhs)
        return sum(r.prob for r in self.by_lhs.get(lhs, ()) if r.rhs == rhs)

    def is_epsilon_free(self) -> bool:
        return all(r.rhs for r in self.rules)

    @property
    def open_class(self) -> frozenset[str]:
        """Preterminals that may emit unseen words (they carry an UNK rule)."""
        return frozenset(r.lhs for r in self.rules if r.rhs == (UNK,))

    def to_text(self) -> str:
        order = [self.start] + [k for k in self.by_lhs if k != self.start]
        lines = [f"%start {self.start}"]
        for lhs in order:
            lines.extend(str(r) for r in self.by_lhs[lhs])
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")


# ---------------------------------------------------------------------------
# file format

_FLOAT = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


def parse_grammar_text(text: str, strict: bool = False, path=None) -> Pcfg:
    start = None
    raw: list[tuple[str, tuple[str, ...], float | None, int]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("%start"):
            parts = line.split()
            if len(parts) != 2:
                raise FormatError("expected '%start SYMBOL'", path=path, line=lineno)
            start = parts[1]
            continue
        if "->" not in line:
            raise FormatError(f"expected 'LHS -> RHS', got {line!r}", path=path, line=lineno)
        lhs, rhs_text = (part.strip() for part in line.split("->", 1))
        if not lhs or len(lhs.split()) != 1:
            raise FormatError(f"bad left-hand side {lhs!r}", path=path, line=lineno)
        for alt in rhs_text.split("|"):
            symbols = alt.split()
            prob = None
            if len(symbols) >= 2 and _FLOAT.match(symbols[-1]):
                prob = float(symbols.pop())
            if not symbols:
                raise FormatError(f"empty alternative for {lhs!r}", path=path, line=lineno)
            if len(symbols) == 1 and symbols[0] in EPSILON_TOKENS:
                symbols = []
            raw.append((lhs, tuple(symbols), prob, lineno))
    if not raw:
        raise FormatError("grammar has no rules", path=path)
    if start is None:
        start = raw[0][0]

    groups: dict[str, list] = defaultdict(list)
    for item in raw:
        groups[item[0]].append(item)
    rules = []
    raw_residuals = {}
    for lhs, items in groups.items():
        given = [p for _, _, p, _ in items if p is not None]
        if given and len(given) != len(items):
            raise FormatError(
                f"{lhs!r}: either all or none of its rules must carry probabilities",
                path=path,
                line=items[0][3],
            )
        if not given:
            probs = [1.0 / len(items)] * len(items)
        else:
            if any(p < 0 for p in given):
                raise FormatError(f"{lhs!r}: negative probability", path=path, line=items[0][3])
            total = sum(given)
            if abs(total - 1.0) > NORMALIZATION_TOLERANCE + _SLACK:
                raise FormatError(
                    f"probabilities for {lhs!r} sum to {total:.9g}, not 1",
                    path=path,
                    line=items[0][3],
                )
            probs = [p / total for p in given]
            raw_residuals[lhs] = total - 1.0
        rules.extend(Rule(lhs, rhs, p) for (_, rhs, _, _), p in zip(items, probs))

    grammar = Pcfg(start, rules)
    diag = validate(grammar)
    # report what the file said, before renormalization
    diag.residuals.update(raw_residuals)
    grammar.diagnostics = diag
    if strict and (diag.unreachable or diag.unproductive):
        raise GrammarError("; ".join(diag.lines()))
    return grammar


def parse_grammar_file(path, strict: bool = False) -> Pcfg:
    path = Path(path)
    return parse_grammar_text(path.read_text(encoding="utf-8"), strict=strict, path=path)


# ---------------------------------------------------------------------------
# validation

def reachable_symbols(grammar: Pcfg) -> set[str]:
    seen = {grammar.start}
    stack = [grammar.start]
    while stack:
        for rule in grammar.by_lhs.get(stack.pop(), ()):
            for s in rule.rhs:
                if s in grammar.nonterminals and s not in seen:
                    seen.add(s)
                    stack.append(s)
    return seen


def productive_symbols(grammar: Pcfg) -> set[str]:
    productive: set[str] = set()
    changed = True
    while changed:
        changed = False
        for rule in grammar.rules:
            if rule.lhs in productive:
                continue
            if all(s in productive or s not in grammar.nonterminals for s in rule.rhs):
                productive.add(rule.lhs)
                changed = True
    return productive


def validate(grammar: Pcfg) -> Diagnostics:
    residuals = {
        lhs: sum(r.prob for r in rules) - 1.0 for lhs, rules in grammar.by_lhs.items()
    }
    reach = reachable_symbols(grammar)
    prod = productive_symbols(grammar)
    return Diagnostics(
        residuals=residuals,
        unreachable=sorted(grammar.nonterminals - reach),
        unproductive=sorted(grammar.nonterminals - prod),
        epsilon_rules=[r for r in grammar.rules if not r.rhs],
    )


# ---------------------------------------------------------------------------
# estimation and sampling

def _root_label(treebank: Treebank) -> str:
    roots = {t.label for t in treebank}
    if len(roots) != 1:
        raise GrammarError(f"treebank trees must share one root label, found {sorted(roots)}")
    return roots.pop()


def _map_leaves(tree: Tree, vocab: Vocabulary) -> Tree:
    return Tree(
        tree.label,
        tuple(vocab.map(c) if isinstance(c, str) else _map_leaves(c, vocab) for c in tree.children),
    )


def rules_from_counts(start: str, counts: Counter) -> list[Rule]:
    lhs_totals: Counter = Counter()
    for (lhs, _), c in counts.items():
        lhs_totals[lhs] += c
    # first-seen order keeps serialization deterministic
    return [Rule(lhs, rhs, c / lhs_totals[lhs]) for (lhs, rhs), c in counts.items()]


def estimate_pcfg(treebank: Treebank, vocab: Vocabulary | None = None) -> Pcfg:
    """Relative-frequency estimate. With ``vocab``, rare words become UNK so
    their preterminals turn open-class."""
    if len(treebank) == 0:
        raise GrammarError("cannot estimate a grammar from an empty treebank")
    start = _root_label(treebank)
    counts: Counter = Counter()
    for tree in treebank:
        if vocab is not None:
            tree = _map_leaves(tree, vocab)
        counts.update(tree.productions())
    return Pcfg(start, rules_from_counts(start, counts))


class _Sampler:
    def __init__(self, grammar: Pcfg):
        self.grammar = grammar
        self.table = {}
        for lhs, rules in grammar.by_lhs.items():
            cum = np.cumsum([r.prob for r in rules])
            self.table[lhs] = (rules, list(cum / cum[-1]))

    def sample(self, rng: np.random.Generator, symbol=None, max_depth: int = 100):
        symbol = symbol or self.grammar.start
        if symbol not in self.grammar.nonterminals:
            return symbol
        if max_depth <= 0:
            raise GrammarError("sampled derivation exceeded the depth limit")
        rules, cum = self.table[symbol]
        rule = rules[min(bisect.bisect_right(cum, rng.random()), len(rules) - 1)]
        children = tuple(self.sample(rng, s, max_depth - 1) for s in rule.rhs)
        return Tree(symbol, children)


def sample_trees(grammar: Pcfg, n: int, seed: int = 0, max_depth: int = 100) -> list[Tree]:
    sampler = _Sampler(grammar)
    rng = np.random.default_rng(seed)
    return [sampler.sample(rng, max_depth=max_depth) for _ in range(n)]


def tree_probability(grammar: Pcfg, tree: Tree) -> float:
    p = 1.0
    for lhs, rhs in tree.productions():
        p *= grammar.prob(lhs, rhs)
    return p


def expected_symbol_counts(grammar: Pcfg) -> dict[str, float]:
    """Expected number of occurrences of each nonterminal per derivation."""
    nts = sorted(grammar.nonterminals)
    index = {s: i for i, s in enumerate(nts)}
    m = np.zeros((len(nts), len(nts)))
    for r in grammar.rules:
        for s in r.rhs:
            if s in index:
                m[index[r.lhs], index[s]] += r.prob
    e = np.zeros(len(nts))
    e[index[grammar.start]] = 1.0
    try:
        n = np.linalg.solve((np.eye(len(nts)) - m).T, e)
    except np.linalg.LinAlgError as exc:
        raise GrammarError("grammar is not consistent: expected counts diverge") from exc
    return {s: float(n[index[s]]) for s in nts}


# ---------------------------------------------------------------------------
# lexicalization

_ANNOTATED = re.compile(r"^(.*)\[(.*)\]$")


def base_category(symbol: str) -> str:
    m = _ANNOTATED.match(symbol)
    return m.group(1) if m else symbol


def read_head_table(path) -> dict[str, tuple[str, ...]]:
    """``CATEGORY child1 child2 ...`` per line: ordered head-child labels."""
    table = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 2:
            raise FormatError("expected 'CATEGORY HEAD-CHILD...'", path=path, line=lineno)
        table[parts[0]] = tuple(parts[1:])
    return table


def write_head_table(table: dict[str, Sequence[str]], path) -> None:
    Path(path).write_text("".join(f"{k} {' '.join(v)}\n" for k, v in table.items()), encoding="utf-8")


class LexicalizedPcfg:
    """A Pcfg over head-annotated categories such as ``VP[reads]``.

    The start symbol is the bare root label; it rewrites to the annotated
    roots (``S -> S[reads]``).
    """

    def __init__(self, grammar: Pcfg, head_table: dict[str, tuple[str, ...]], notes=()):
        self.grammar = grammar
        self.head_table = dict(head_table)
        self.notes = list(notes)

    @property
    def start(self):
        return self.grammar.start

    def category_of(self, symbol: str) -> str:
        return base_category(symbol)

    def delexicalize(self) -> Pcfg:
        """Strip head annotations, merging rules weighted by the expected
        usage of each annotated category."""
        g = self.grammar
        counts = expected_symbol_counts(g)
        mass: dict[tuple[str, tuple[str, ...]], float] = {}
        for r in g.rules:
            if r.lhs == g.start:
                continue
            key = (base_category(r.lhs), tuple(base_category(s) if s in g.nonterminals else s for s in r.rhs))
            mass[key] = mass.get(key, 0.0) + counts[r.lhs] * r.prob
        totals: dict[str, float] = defaultdict(float)
        for (lhs, _), m in mass.items():
            totals[lhs] += m
        return Pcfg(g.start, [Rule(lhs, rhs, m / totals[lhs]) for (lhs, rhs), m in mass.items()])

    def save(self, path) -> None:
        self.grammar.save(path)

    @classmethod
    def load(cls, path, head_table=None) -> "LexicalizedPcfg":
        return cls(parse_grammar_file(path), head_table or {})


def _head_index(node: Tree, head_table, notes: set) -> int:
    if not node.children:
        raise GrammarError(f"node {node.label!r} has no children; cannot choose a head")
    labels = [c.label if isinstance(c, Tree) else None for c in node.children]
    for pref in head_table.get(node.label, ()):
        if pref in labels:
            return labels.index(pref)
    if node.label in head_table:
        notes.add(f"no listed head child for {node.label} -> {' '.join(str(x) for x in labels)}; used rightmost")
    else:
        notes.add(f"category {node.label} not in head table; used rightmost child")
    return len(node.children) - 1


def annotate_heads(tree: Tree, head_table, notes: set | None = None) -> Tree:
    """Return a copy of ``tree`` whose labels carry head words: ``NP[book]``."""
    notes = set() if notes is None else notes

    def walk(node: Tree) -> tuple[Tree, str]:
        if node.is_preterminal():
            word = node.children[0]
            return Tree(f"{node.label}[{word}]", node.children), word
        if not node.children:
            raise GrammarError(f"node {node.label!r} has no children; cannot choose a head")
        done = [walk(c) if isinstance(c, Tree) else (c, c) for c in node.children]
        head = done[_head_index(node, head_table, notes)][1]
        return Tree(f"{node.label}[{head}]", tuple(t for t, _ in done)), head

    return walk(tree)[0]


def lexicalize(
    treebank: Treebank, head_table: dict[str, Sequence[str]], vocab: Vocabulary | None = None
) -> LexicalizedPcfg:
    if len(treebank) == 0:
        raise GrammarError("cannot lexicalize an empty treebank")
    head_table = {k: tuple(v) for k, v in head_table.items()}
    start = _root_label(treebank)
    notes: set = set()
    counts: Counter = Counter()
    for tree in treebank:
        if vocab is not None:
            tree = _map_leaves(tree, vocab)
        annotated = annotate_heads(tree, head_table, notes)
        counts[(start, (annotated.label,))] += 1
        counts.update(annotated.productions())
    grammar = Pcfg(start, rules_from_counts(start, counts))
    return LexicalizedPcfg(grammar, head_table, sorted(notes))
