"""Homophonous-phrase (HP) stimuli: loading, toy generation from a design
grammar, and scoring into the 8-column surprisal table.

An HP is a two-word string read either as article + noun (NP) or as
clitic + verb (VP). Trials fall into five classes: Strong_PRED-NP,
Strong_PRED-VP, Weak_PRED-NP, UNPRED-NP and UNPRED-VP.
"""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import TaggedSentence
from .errors import FormatError, GrammarError, ParseError, SurprisalLabError
from .ngram import NGramModel, ngram_surprisal
from .pcfg import LexicalizedPcfg, Pcfg, _Sampler, base_category, tree_probability
from .prefix import get_parser, split_surprisal, viterbi_parse

CONDITIONS = ("Strong_PRED", "Weak_PRED", "UNPRED")
PHRASE_TYPES = ("NP", "VP")
CLASSES = ("Strong_PRED-NP", "Strong_PRED-VP", "Weak_PRED-NP", "UNPRED-NP", "UNPRED-VP")
NOTIONS = ("ngram", "lex", "pos", "syn")
FEATURES = tuple(f"{notion}_w{k}" for notion in NOTIONS for k in (1, 2))
STIMULUS_HEADER = ("id", "condition", "phrase_type", "tokens", "hp_start")
TABLE_HEADER = ("trial_id", "condition", "phrase_type") + FEATURES


@dataclass(frozen=True)
class StimulusTrial:
    id: str
    condition: str
    phrase_type: str
    tokens: tuple[str, ...]
    hp_start: int
    tags: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.condition not in CONDITIONS:
            raise SurprisalLabError(f"trial {self.id}: unknown condition {self.condition!r}")
        if self.phrase_type not in PHRASE_TYPES:
            raise SurprisalLabError(f"trial {self.id}: unknown phrase type {self.phrase_type!r}")
        if self.condition == "Weak_PRED" and self.phrase_type == "VP":
            raise SurprisalLabError(
                f"trial {self.id}: Weak_PRED-VP is impossible (weakly predictable HPs can only be NPs)"
            )
        if not 0 <= self.hp_start or self.hp_start + 1 >= len(self.tokens):
            raise SurprisalLabError(
                f"trial {self.id}: hp_start={self.hp_start} leaves no second HP word in {len(self.tokens)} tokens"
            )
        if self.tags is not None and len(self.tags) != len(self.tokens):
            raise SurprisalLabError(f"trial {self.id}: {len(self.tags)} tags for {len(self.tokens)} tokens")

    @property
    def label(self) -> str:
        return f"{self.condition}-{self.phrase_type}"


def class_counts(items: Iterable) -> dict[str, int]:
    counts = Counter(item.label for item in items)
    return {c: counts.get(c, 0) for c in CLASSES}


def load_stimuli(path) -> list[StimulusTrial]:
    """CSV with header ``id,condition,phrase_type,tokens,hp_start`` and an
    optional ``tags`` column; tokens and tags are space-separated."""
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in STIMULUS_HEADER if c not in (reader.fieldnames or [])]
        if missing:
            raise FormatError(f"missing column(s): {', '.join(missing)}", path=path, line=1)
        trials = []
        for lineno, row in enumerate(reader, start=2):
            try:
                hp = int(row["hp_start"])
            except ValueError:
                raise FormatError(f"hp_start must be an integer, got {row['hp_start']!r}", path=path, line=lineno)
            tags = tuple(row["tags"].split()) if row.get("tags") else None
            try:
                trials.append(
                    StimulusTrial(row["id"], row["condition"], row["phrase_type"], tuple(row["tokens"].split()), hp, tags)
                )
            except SurprisalLabError as exc:
                raise FormatError(str(exc), path=path, line=lineno) from exc
    if not trials:
        raise FormatError("no trials", path=path)
    return trials


def write_stimuli(trials: Sequence[StimulusTrial], path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(STIMULUS_HEADER + ("tags",))
        for t in trials:
            writer.writerow([t.id, t.condition, t.phrase_type, " ".join(t.tokens), t.hp_start, " ".join(t.tags or ())])


# ---------------------------------------------------------------------------
# toy generation

def _homographs(grammar: Pcfg, cat_a: str, cat_b: str) -> set[str]:
    def words(cat):
        return {r.rhs[0] for r in grammar.by_lhs.get(cat, ()) if len(r.rhs) == 1 and r.rhs[0] in grammar.terminals}

    return words(cat_a) & words(cat_b)


def classify_sentence(
    grammar: Pcfg,
    tokens: Sequence[str],
    hp_start: int,
    article: str = "Det",
    clitic: str = "Cl",
    noun: str = "N",
    verb: str = "V",
) -> tuple[str, set[str]]:
    """Predictability condition of the HP at ``hp_start`` and the set of
    phrase types still possible once both HP words have been read.

    Strong_PRED: the words before the HP admit only one of article/clitic.
    Weak_PRED: both are admitted, but the second HP word leaves one reading.
    UNPRED: both readings survive the whole HP.
    """
    parser = get_parser(grammar)
    h = hp_start
    trace = parser.run(tokens[:h])
    if not trace.ok:
        raise ParseError(trace.reason, position=trace.failed_at)
    open_np = parser.next_category_mass(trace, h, {article}) > 0
    open_vp = parser.next_category_mass(trace, h, {clitic}) > 0
    prefix = tokens[: h + 2]
    readings = set()
    if parser.run(prefix, [None] * h + [{article}, {noun}]).ok:
        readings.add("NP")
    if parser.run(prefix, [None] * h + [{clitic}, {verb}]).ok:
        readings.add("VP")
    if open_np != open_vp:
        return "Strong_PRED", readings
    if len(readings) == 1:
        return "Weak_PRED", readings
    return "UNPRED", readings


def find_hp(tokens: Sequence[str], first_words: set[str], second_words: set[str]) -> list[int]:
    return [i for i in range(len(tokens) - 1) if tokens[i] in first_words and tokens[i + 1] in second_words]


def generate_toy_stimuli(
    design_grammar: Pcfg,
    per_class: int = 30,
    seed: int = 0,
    article: str = "Det",
    clitic: str = "Cl",
    noun: str = "N",
    verb: str = "V",
    max_samples: int = 500_000,
) -> list[StimulusTrial]:
    """Sample unambiguous sentences containing exactly one HP (not sentence
    initial) and sort them into the five classes. UNPRED-NP and UNPRED-VP
    trials come in pairs sharing every token up to and including the HP."""
    if per_class < 1:
        raise SurprisalLabError("per_class must be >= 1")
    first = _homographs(design_grammar, article, clitic)
    second = _homographs(design_grammar, noun, verb)
    if not first:
        raise GrammarError(f"design grammar has no {article}/{clitic} homograph (a word emitted by both)")
    if not second:
        raise GrammarError(f"design grammar has no {noun}/{verb} homograph (a word emitted by both)")

    sampler = _Sampler(design_grammar)
    rng = np.random.default_rng(seed)
    pools: dict[str, list] = {c: [] for c in ("Strong_PRED-NP", "Strong_PRED-VP", "Weak_PRED-NP")}
    unpred: dict[tuple, dict[str, list]] = {}
    seen: set[tuple[str, ...]] = set()
    readings_of = {(article, noun): "NP", (clitic, verb): "VP"}

    def n_pairs():
        return sum(min(len(v["NP"]), len(v["VP"])) for v in unpred.values())

    for _ in range(max_samples):
        if all(len(p) >= per_class for p in pools.values()) and n_pairs() >= per_class:
            break
        tree = sampler.sample(rng)
        tokens = tuple(tree.leaves())
        if tokens in seen:
            continue
        seen.add(tokens)
        hps = find_hp(tokens, first, second)
        if len(hps) != 1 or hps[0] == 0:
            continue
        h = hps[0]
        tags = tuple(tree.preterminals())
        phrase = readings_of.get((tags[h], tags[h + 1]))
        if phrase is None:
            continue
        p_tree = tree_probability(design_grammar, tree)
        trace = get_parser(design_grammar).run(tokens)
        p_sent = math.exp(trace.log_complete[-1]) if trace.ok else 0.0
        if not math.isclose(p_sent, p_tree, rel_tol=1e-9):
            continue  # ambiguous sentence
        condition, _ = classify_sentence(design_grammar, tokens, h, article, clitic, noun, verb)
        if condition == "Weak_PRED" and phrase == "VP":
            continue
        item = (tokens, h, tags)
        if condition == "UNPRED":
            unpred.setdefault(tokens[: h + 2], {"NP": [], "VP": []})[phrase].append(item)
        else:
            pools[f"{condition}-{phrase}"].append(item)
    else:
        raise SurprisalLabError(
            f"could not fill {per_class} trials per class within {max_samples} samples: "
            + ", ".join(f"{k}={len(v)}" for k, v in pools.items())
            + f", UNPRED pairs={n_pairs()}"
        )

    trials: list[StimulusTrial] = []
    for label, pool in pools.items():
        condition, phrase = label.rsplit("-", 1)
        for k, (tokens, h, tags) in enumerate(pool[:per_class], start=1):
            trials.append(StimulusTrial(f"{label}-{k:03d}", condition, phrase, tokens, h, tags))
    pairs = []
    for group in unpred.values():
        pairs.extend(zip(group["NP"], group["VP"]))
    np_trials, vp_trials = [], []
    for k, (a, b) in enumerate(pairs[:per_class], start=1):
        np_trials.append(StimulusTrial(f"UNPRED-NP-{k:03d}", "UNPRED", "NP", a[0], a[1], a[2]))
        vp_trials.append(StimulusTrial(f"UNPRED-VP-{k:03d}", "UNPRED", "VP", b[0], b[1], b[2]))
    return trials + np_trials + vp_trials


# ---------------------------------------------------------------------------
# scoring

@dataclass(frozen=True)
class SurprisalRow:
    trial_id: str
    condition: str
    phrase_type: str
    values: tuple[float, ...]  # ordered as FEATURES

    @property
    def label(self) -> str:
        return f"{self.condition}-{self.phrase_type}"

    def __getitem__(self, feature: str) -> float:
        return self.values[FEATURES.index(feature)]


@dataclass
class SurprisalTable:
    rows: list[SurprisalRow]

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def matrix(self, features: Sequence[str] = FEATURES, rows=None) -> np.ndarray:
        idx = [FEATURES.index(f) for f in features]
        rows = self.rows if rows is None else rows
        return np.array([[r.values[i] for i in idx] for r in rows], dtype=float).reshape(len(rows), len(idx))

    def by_class(self) -> dict[str, list[SurprisalRow]]:
        out: dict[str, list[SurprisalRow]] = {c: [] for c in CLASSES}
        for r in self.rows:
            out.setdefault(r.label, []).append(r)
        return out

    def values(self, feature: str, label: str) -> list[float]:
        return [r[feature] for r in self.rows if r.label == label]

    def class_counts(self) -> dict[str, int]:
        return class_counts(self.rows)

    def to_csv(self, path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(TABLE_HEADER)
            for r in self.rows:
                writer.writerow([r.trial_id, r.condition, r.phrase_type] + [repr(v) for v in r.values])

    def to_long_csv(self, path) -> None:
        """One row per (trial, notion, HP word): ready for grouped boxplots."""
        roles = {1: "art/cl", 2: "N/V"}
        with Path(path).open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["trial_id", "class", "condition", "phrase_type", "notion", "position", "word_role", "surprisal"])
            for r in self.rows:
                for notion in NOTIONS:
                    for k in (1, 2):
                        writer.writerow(
                            [r.trial_id, r.label, r.condition, r.phrase_type, notion, f"w{k}", roles[k], repr(r[f"{notion}_w{k}"])]
                        )

    @classmethod
    def read_csv(cls, path) -> "SurprisalTable":
        path = Path(path)
        rows = []
        with path.open(encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != TABLE_HEADER:
                raise FormatError(f"expected header {','.join(TABLE_HEADER)}", path=path, line=1)
            for lineno, row in enumerate(reader, start=2):
                try:
                    values = tuple(float(row[f]) for f in FEATURES)
                except ValueError as exc:
                    raise FormatError(str(exc), path=path, line=lineno) from exc
                rows.append(SurprisalRow(row["trial_id"], row["condition"], row["phrase_type"], values))
        return cls(rows)


def tags_for(trial: StimulusTrial, grammar: Pcfg | LexicalizedPcfg) -> tuple[str, ...]:
    if trial.tags is not None:
        return trial.tags
    g = grammar.grammar if isinstance(grammar, LexicalizedPcfg) else grammar
    best = viterbi_parse(g, trial.tokens)
    if best is None:
        raise ParseError(f"trial {trial.id}: no parse to read POS tags from")
    return tuple(base_category(t) for t in best[0].preterminals())


def score_stimuli(
    trials: Sequence[StimulusTrial],
    word_model: NGramModel,
    pos_model: NGramModel,
    grammar: Pcfg | LexicalizedPcfg,
    base: float = 2.0,
) -> SurprisalTable:
    """N-gram, lexical, POS and syntactic surprisal at both HP words."""
    rows = []
    for trial in trials:
        h = trial.hp_start
        try:
            tags = tags_for(trial, grammar)
            sentence = TaggedSentence(trial.tokens, tags)
            ngram = ngram_surprisal(word_model, sentence, base)
            pos = ngram_surprisal(pos_model, sentence, base)
            split = split_surprisal(grammar, trial.tokens, base)
        except SurprisalLabError as exc:
            where = f" at position {exc.position}" if getattr(exc, "position", None) is not None else ""
            raise ParseError(f"trial {trial.id}{where}: {exc}", position=getattr(exc, "position", None)) from exc
        values = (
            ngram[h], ngram[h + 1],
            split.lexical[h], split.lexical[h + 1],
            pos[h], pos[h + 1],
            split.syntactic[h], split.syntactic[h + 1],
        )
        if not all(math.isfinite(v) and v >= 0 for v in values):
            raise ParseError(f"trial {trial.id}: non-finite surprisal {values}")
        rows.append(SurprisalRow(trial.id, trial.condition, trial.phrase_type, values))
    return SurprisalTable(rows)
