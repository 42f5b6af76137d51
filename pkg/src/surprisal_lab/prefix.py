"""Exact prefix probabilities under a PCFG and the surprisal measures built
on them.

The parser is a probabilistic Earley chart (forward and inner
probabilities) in which prediction and unit-production completion are
closed in one step with the matrices

    R_L = (I - P_L)^-1    P_L[X, Y] = sum of P(X -> Y ...)
    R_U = (I - P_U)^-1    P_U[X, Y] = P(X -> Y)

so left recursion and unit cycles are summed as geometric series rather
than by iteration. Terminals only ever occur in lexical rules ``X -> w``;
terminals inside longer right-hand sides are moved into private
preterminals when the parser is built.

All chart quantities in column i are stored divided by the prefix
probability of the first i words, so long sentences do not underflow.
"""

from __future__ import annotations

import heapq
import itertools
import math
import weakref
from dataclasses import dataclass, field
from typing import Callable, Collection, Sequence

import numpy as np

from .corpus import UNK, Tree
from .errors import GrammarError, ParseError
from .pcfg import LexicalizedPcfg, Pcfg


@dataclass
class ParseTrace:
    """Per-position results of one left-to-right pass.

    ``log_prefix[i]`` is the natural log of the prefix probability of the
    first i tokens; ``log_struct[i]`` the log of the structural prefix mass
    for token i (everything up to, not including, its emission).
    """

    tokens: tuple[str, ...]
    log_prefix: list[float]
    log_struct: list[float]
    log_complete: list[float]
    pred: list[np.ndarray]
    failed_at: int | None = None
    reason: str = ""

    @property
    def ok(self) -> bool:
        return self.failed_at is None


@dataclass
class SurprisalBreakdown:
    words: tuple[str, ...]
    total: list[float]
    syntactic: list[float]
    lexical: list[float]

    def __len__(self):
        return len(self.words)

    def rows(self):
        return list(zip(self.words, self.total, self.syntactic, self.lexical))


class PrefixParser:
    def __init__(self, grammar: Pcfg | LexicalizedPcfg, category_of: Callable[[str], str] | None = None):
        if isinstance(grammar, LexicalizedPcfg):
            category_of = category_of or grammar.category_of
            grammar = grammar.grammar
        if not grammar.is_epsilon_free():
            raise GrammarError("the prefix parser does not support epsilon rules")
        self.grammar = grammar
        category_of = category_of or (lambda s: s)

        symbols = sorted(grammar.nonterminals)
        index = {s: i for i, s in enumerate(symbols)}

        def preterminal_for(word: str) -> int:
            name = f"⟨{word}⟩"
            if name not in index:
                index[name] = len(symbols)
                symbols.append(name)
            return index[name]

        lexical: dict[str, list[tuple[int, float]]] = {}
        phrasal: list[tuple[int, tuple[int, ...], float]] = []
        for rule in grammar.rules:
            lhs = index[rule.lhs]
            if len(rule.rhs) == 1 and rule.rhs[0] not in grammar.nonterminals:
                lexical.setdefault(rule.rhs[0], []).append((lhs, rule.prob))
                continue
            rhs = []
            for s in rule.rhs:
                if s in grammar.nonterminals:
                    rhs.append(index[s])
                else:
                    pre = preterminal_for(s)
                    if (pre, 1.0) not in lexical.setdefault(s, []):
                        lexical[s].append((pre, 1.0))
                    rhs.append(pre)
            phrasal.append((lhs, tuple(rhs), rule.prob))

        n = len(symbols)
        self.symbols = symbols
        self.index = index
        self.n = n
        self.lexical = lexical
        self.category = [category_of(s) if s in grammar.nonterminals else s for s in symbols]
        self.lex_total = np.zeros(n)
        for emitters in lexical.values():
            for x, p in emitters:
                self.lex_total[x] += p

        p_left = np.zeros((n, n))
        p_unit = np.zeros((n, n))
        self.rules: list[tuple[int, tuple[int, ...], float]] = []
        self.rules_by_lhs: list[list[int]] = [[] for _ in range(n)]
        for lhs, rhs, p in phrasal:
            p_left[lhs, rhs[0]] += p
            if len(rhs) == 1:
                p_unit[lhs, rhs[0]] += p
            else:
                self.rules_by_lhs[lhs].append(len(self.rules))
                self.rules.append((lhs, rhs, p))
        self.r_left = _closure(p_left, "left-corner")
        self.r_unit = _closure(p_unit, "unit-production")
        self.unit_parents = [
            [(z, float(self.r_unit[z, y])) for z in np.nonzero(self.r_unit[:, y] > 0)[0]]
            for y in range(n)
        ]
        self.start = index[grammar.start]
        self._compat_cache: dict[tuple, np.ndarray] = {}

    # ------------------------------------------------------------------
    def emitters(self, word: str, allowed: Collection[str] | None = None) -> list[tuple[int, float]]:
        found = self.lexical.get(word)
        if found is None:
            found = self.lexical.get(UNK, [])
        if allowed is not None:
            found = [(x, p) for x, p in found if self.symbols[x] in allowed or self.category[x] in allowed]
        return found

    def _compatible(self, emitters) -> np.ndarray:
        """0/1 mask of symbols whose category can emit the current word."""
        key = tuple(sorted({self.category[x] for x, _ in emitters}))
        mask = self._compat_cache.get(key)
        if mask is None:
            cats = set(key)
            mask = np.array(
                [1.0 if self.lex_total[x] > 0 and self.category[x] in cats else 0.0 for x in range(self.n)]
            )
            self._compat_cache[key] = mask
        return mask

    def _predict(self, column: int, vec: np.ndarray, items: dict, waiting: dict) -> np.ndarray:
        pred = vec @ self.r_left
        for x in np.nonzero(pred > 0)[0]:
            mass = pred[x]
            for r in self.rules_by_lhs[x]:
                _, rhs, p = self.rules[r]
                key = (column, r, 0)
                items[key] = [mass * p, p]
                waiting.setdefault(rhs[0], []).append(key)
        return pred

    def run(self, tokens: Sequence[str], allowed: Sequence[Collection[str] | None] | None = None) -> ParseTrace:
        """Parse ``tokens`` left to right. ``allowed[i]``, when given,
        restricts the preterminals (names or categories) that may emit
        token i."""
        tokens = tuple(tokens)
        start_vec = np.zeros(self.n)
        start_vec[self.start] = 1.0
        items: list[dict] = [{}]
        waiting: list[dict] = [{}]
        pred = [self._predict(0, start_vec, items[0], waiting[0])]
        trace = ParseTrace(tokens, [0.0], [], [-math.inf], pred)

        for i in range(1, len(tokens) + 1):
            word = tokens[i - 1]
            emit = self.emitters(word, allowed[i - 1] if allowed is not None else None)
            prev = pred[i - 1]
            ratio = sum(prev[x] * p for x, p in emit)
            if ratio <= 0.0:
                trace.failed_at = i - 1
                trace.reason = (
                    f"token {word!r} at position {i - 1} is not derivable after the preceding words"
                    if word in self.lexical or UNK in self.lexical
                    else f"token {word!r} is not a terminal of the grammar"
                )
                return trace
            struct = float(prev @ (self._compatible(emit) * self.lex_total))
            trace.log_prefix.append(trace.log_prefix[-1] + math.log(ratio))
            trace.log_struct.append(trace.log_prefix[-2] + math.log(struct))

            col_items: dict = {}
            col_waiting: dict = {}
            pending: dict[int, dict[int, float]] = {i - 1: {}}
            for x, p in emit:
                if prev[x] > 0:
                    pending[i - 1][x] = pending[i - 1].get(x, 0.0) + p / ratio
            heap = [-(i - 1)]
            complete = 0.0
            while heap:
                j = -heapq.heappop(heap)
                for y, inner in pending.pop(j).items():
                    if j == 0:
                        complete += float(self.r_unit[self.start, y]) * inner
                    for z, r_zy in self.unit_parents[y]:
                        for key in waiting[j].get(z, ()):
                            k, r, dot = key
                            alpha, gamma = items[j][key]
                            f = r_zy * inner
                            lhs, rhs, _ = self.rules[r]
                            if dot + 1 == len(rhs):
                                if k not in pending:
                                    pending[k] = {}
                                    heapq.heappush(heap, -k)
                                pending[k][lhs] = pending[k].get(lhs, 0.0) + gamma * f
                            else:
                                nkey = (k, r, dot + 1)
                                cell = col_items.get(nkey)
                                if cell is None:
                                    col_items[nkey] = [alpha * f, gamma * f]
                                    col_waiting.setdefault(rhs[dot + 1], []).append(nkey)
                                else:
                                    cell[0] += alpha * f
                                    cell[1] += gamma * f
            trace.log_complete.append(
                trace.log_prefix[-1] + math.log(complete) if complete > 0 else -math.inf
            )
            vec = np.zeros(self.n)
            for (k, r, dot), (alpha, _) in col_items.items():
                vec[self.rules[r][1][dot]] += alpha
            items.append(col_items)
            waiting.append(col_waiting)
            pred.append(self._predict(i, vec, col_items, col_waiting))
        return trace

    def next_category_mass(self, trace: ParseTrace, position: int, categories: Collection[str]) -> float:
        """Structural mass (relative to the prefix) of the next word being
        emitted by a preterminal in ``categories``, after ``position`` tokens."""
        vec = trace.pred[position]
        return float(
            sum(vec[x] * self.lex_total[x] for x in range(self.n) if self.category[x] in categories)
        )


def _closure(m: np.ndarray, what: str) -> np.ndarray:
    n = m.shape[0]
    try:
        r = np.linalg.inv(np.eye(n) - m)
    except np.linalg.LinAlgError as exc:
        raise GrammarError(f"{what} closure diverges (I - P is singular)") from exc
    if not np.all(np.isfinite(r)) or np.any(r < -1e-9):
        raise GrammarError(f"{what} closure diverges; the grammar is not consistent")
    r[r < 0] = 0.0
    return r


_PARSERS: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def get_parser(grammar: Pcfg | LexicalizedPcfg) -> PrefixParser:
    parser = _PARSERS.get(grammar)
    if parser is None:
        parser = PrefixParser(grammar)
        _PARSERS[grammar] = parser
    return parser


def _to_bits(log_value: float, base: float) -> float:
    return -log_value / math.log(base)


def prefix_probability(grammar: Pcfg | LexicalizedPcfg, tokens: Sequence[str]) -> float:
    """Summed probability of all trees whose yield begins with ``tokens``;
    0.0 when the prefix is ungrammatical."""
    trace = get_parser(grammar).run(tokens)
    if not trace.ok:
        return 0.0
    return math.exp(trace.log_prefix[-1])


def sentence_probability(grammar: Pcfg | LexicalizedPcfg, tokens: Sequence[str]) -> float:
    """Summed probability of all trees whose yield is exactly ``tokens``."""
    if not tokens:
        return 0.0
    trace = get_parser(grammar).run(tokens)
    if not trace.ok:
        return 0.0
    return math.exp(trace.log_complete[-1])


def _checked_trace(grammar, sentence) -> tuple[PrefixParser, ParseTrace]:
    parser = get_parser(grammar)
    trace = parser.run(sentence)
    if not trace.ok:
        raise ParseError(trace.reason, position=trace.failed_at)
    return parser, trace


def total_surprisal(
    grammar: Pcfg | LexicalizedPcfg,
    sentence: Sequence[str],
    base: float = 2.0,
    include_end: bool = False,
) -> list[float]:
    """-log_b prefix(w1..wi) / prefix(w1..wi-1) per word. With
    ``include_end`` a final value for the end of the sentence is appended,
    so the values sum to -log_b P(sentence)."""
    _, trace = _checked_trace(grammar, sentence)
    lp = trace.log_prefix
    out = [_to_bits(lp[i] - lp[i - 1], base) for i in range(1, len(lp))]
    if include_end:
        if trace.log_complete[-1] == -math.inf:
            raise ParseError("the sentence is an incomplete prefix", position=len(sentence))
        out.append(_to_bits(trace.log_complete[-1] - lp[-1], base))
    return out


def split_surprisal(grammar: Pcfg | LexicalizedPcfg, sentence: Sequence[str], base: float = 2.0) -> SurprisalBreakdown:
    """Total surprisal split at the emission of each word: syntactic is the
    surprisal of the structure up to (not including) the word, lexical the
    surprisal of the word given that structure."""
    _, trace = _checked_trace(grammar, sentence)
    lp, ls = trace.log_prefix, trace.log_struct
    total, syn, lex = [], [], []
    for i in range(1, len(lp)):
        total.append(_to_bits(lp[i] - lp[i - 1], base))
        syn.append(max(0.0, _to_bits(ls[i - 1] - lp[i - 1], base)))
        lex.append(max(0.0, _to_bits(lp[i] - ls[i - 1], base)))
    return SurprisalBreakdown(tuple(sentence), total, syn, lex)


# ---------------------------------------------------------------------------
# exhaustive enumeration (independent oracle)

@dataclass
class TreeEnumeration:
    trees: list[tuple[Tree, float]] = field(default_factory=list)

    @property
    def residual(self) -> float:
        """Probability mass of derivations deeper than the depth bound."""
        return 1.0 - sum(p for _, p in self.trees)

    def __iter__(self):
        return iter(self.trees)

    def __len__(self):
        return len(self.trees)

    def prefix_mass(self, prefix: Sequence[str]) -> float:
        prefix = list(prefix)
        k = len(prefix)
        return sum(p for t, p in self.trees if t.leaves()[:k] == prefix)

    def string_mass(self, sentence: Sequence[str]) -> float:
        sentence = list(sentence)
        return sum(p for t, p in self.trees if t.leaves() == sentence)


def enumerate_trees(grammar: Pcfg, max_depth: int) -> TreeEnumeration:
    """All derivation trees with at most ``max_depth`` nonterminal levels,
    with their probabilities (product of rule probabilities)."""
    memo: dict[tuple[str, int], list[tuple[Tree, float]]] = {}

    def build(symbol: str, depth: int) -> list[tuple[Tree, float]]:
        key = (symbol, depth)
        if key in memo:
            return memo[key]
        out: list[tuple[Tree, float]] = []
        if depth > 0:
            for rule in grammar.by_lhs[symbol]:
                options = [
                    build(s, depth - 1) if s in grammar.nonterminals else [(s, 1.0)]
                    for s in rule.rhs
                ]
                for combo in itertools.product(*options):
                    p = rule.prob
                    for _, q in combo:
                        p *= q
                    out.append((Tree(symbol, tuple(c for c, _ in combo)), p))
        memo[key] = out
        return out

    return TreeEnumeration(build(grammar.start, max_depth))


# ---------------------------------------------------------------------------
# most probable parse

def viterbi_parse(grammar: Pcfg, tokens: Sequence[str]) -> tuple[Tree, float] | None:
    """Most probable tree for ``tokens`` (span chart, unit rules relaxed to
    a fixed point). Returns None when the sentence has no parse."""
    nts = grammar.nonterminals
    toks = [w if w in grammar.terminals or UNK not in grammar.terminals else UNK for w in tokens]
    n = len(toks)
    if n == 0:
        return None
    best: dict[tuple[int, int], dict[str, tuple[float, object]]] = {}
    units = [r for r in grammar.rules if len(r.rhs) == 1 and r.rhs[0] in nts]
    others = [r for r in grammar.rules if not (len(r.rhs) == 1 and r.rhs[0] in nts) and r.rhs]

    for length in range(1, n + 1):
        for i in range(0, n - length + 1):
            j = i + length
            cell: dict[str, tuple[float, object]] = {}
            for rule in others:
                m = len(rule.rhs)
                if m > length:
                    continue
                # frontier: end position -> (prob, child spans)
                frontier = {i: (rule.prob, ())}
                for pos, sym in enumerate(rule.rhs):
                    left = m - pos - 1
                    nxt: dict[int, tuple[float, tuple]] = {}
                    for e0, (p0, spans) in frontier.items():
                        if sym not in nts:
                            if e0 < j and toks[e0] == sym and j - (e0 + 1) >= left:
                                cand = (p0, spans + ((sym, e0, e0 + 1),))
                                if cand[0] > nxt.get(e0 + 1, (0.0,))[0]:
                                    nxt[e0 + 1] = cand
                            continue
                        for e1 in range(e0 + 1, j - left + 1):
                            if (e0, e1) == (i, j):
                                continue
                            sub = best.get((e0, e1), {}).get(sym)
                            if sub is None:
                                continue
                            cand = (p0 * sub[0], spans + ((sym, e0, e1),))
                            if cand[0] > nxt.get(e1, (0.0,))[0]:
                                nxt[e1] = cand
                    frontier = nxt
                    if not frontier:
                        break
                if j in frontier and frontier[j][0] > cell.get(rule.lhs, (0.0,))[0]:
                    cell[rule.lhs] = (frontier[j][0], ("rule", frontier[j][1]))
            for _ in range(len(nts)):
                changed = False
                for rule in units:
                    sub = cell.get(rule.rhs[0])
                    if sub is None:
                        continue
                    cand = rule.prob * sub[0]
                    if cand > cell.get(rule.lhs, (0.0,))[0]:
                        cell[rule.lhs] = (cand, ("unit", rule.rhs[0]))
                        changed = True
                if not changed:
                    break
            best[(i, j)] = cell

    top = best[(0, n)].get(grammar.start)
    if top is None:
        return None

    def build(sym: str, i: int, j: int) -> Tree:
        _, back = best[(i, j)][sym]
        kind, data = back
        if kind == "unit":
            return Tree(sym, (build(data, i, j),))
        children = [build(child, a, b) if child in nts else tokens[a] for child, a, b in data]
        return Tree(sym, tuple(children))

    return build(grammar.start, 0, n), top[0]
