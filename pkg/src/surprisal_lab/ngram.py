"""Composite n-gram models over words or POS tags.

The probability of a unit is a fixed-weight linear interpolation of
additively smoothed count ratios of orders 1..n:

    p(t | ctx) = sum_k lambda_k * (count(ctx_k, t) + alpha) / (count(ctx_k) + alpha * V)

where ctx_k is the last k-1 units of the context and V the size of the
unit inventory. With alpha = 0 and all weight on the top order this is the
plain count ratio count(ctx, t) / count(ctx).
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .corpus import BOS, EOS, UNK, TaggedSentence, Vocabulary
from .errors import FormatError, SurprisalLabError

FORMAT_NAME = "surprisal-lab-ngram"
FORMAT_VERSION = 1
MODES = ("word", "pos")


@dataclass
class NGramModel:
    order: int
    mode: str
    lambdas: tuple[float, ...]
    alpha: float
    inventory: tuple[str, ...]
    known: frozenset[str]
    # counts[k][context] -> {target: count}; context has k units (k = 0..order-1)
    counts: list[dict[tuple[str, ...], dict[str, int]]]
    totals: list[dict[tuple[str, ...], int]]

    def __post_init__(self):
        self._inventory_set = frozenset(self.inventory)

    @property
    def vocab_size(self) -> int:
        return len(self.inventory)

    def map_unit(self, unit: str) -> str:
        if unit in self._inventory_set:
            return unit
        if self.mode == "word" and unit != BOS:
            return UNK
        raise SurprisalLabError(f"{unit!r} is not a {self.mode} unit of this model")

    def units_of(self, sentence: TaggedSentence | Sequence[str]) -> list[str]:
        if isinstance(sentence, TaggedSentence):
            seq = sentence.tokens if self.mode == "word" else sentence.tags
        else:
            seq = sentence
        return [self.map_unit(u) for u in seq]

    def _context(self, context: Sequence[str]) -> tuple[str, ...]:
        mapped = [u if u == BOS else self.map_unit(u) for u in context]
        need = self.order - 1
        if need == 0:
            return ()
        mapped = mapped[-need:]
        return tuple([BOS] * (need - len(mapped)) + mapped)

    def _component(self, k: int, ctx: tuple[str, ...], target: str) -> float:
        """Smoothed estimate of order k+1 (context of k units)."""
        table = self.counts[k].get(ctx)
        total = self.totals[k].get(ctx, 0)
        c = table.get(target, 0) if table else 0
        denom = total + self.alpha * self.vocab_size
        if denom == 0:
            return 1.0 / self.vocab_size
        return (c + self.alpha) / denom

    def prob(self, context: Sequence[str], target: str) -> float:
        if target == BOS:
            raise SurprisalLabError(f"{BOS} is never predicted")
        target = self.map_unit(target)
        ctx = self._context(context)
        p = 0.0
        for k, lam in enumerate(self.lambdas):
            if lam == 0.0:
                continue
            sub = ctx[len(ctx) - k:] if k else ()
            p += lam * self._component(k, sub, target)
        return p

    def distribution(self, context: Sequence[str]) -> dict[str, float]:
        return {t: self.prob(context, t) for t in self.inventory}

    # -- serialization -------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "order": self.order,
            "mode": self.mode,
            "lambdas": list(self.lambdas),
            "alpha": self.alpha,
            "inventory": list(self.inventory),
            "known": sorted(self.known),
            "counts": [
                [[list(ctx), dict(sorted(table.items()))] for ctx, table in sorted(level.items())]
                for level in self.counts
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NGramModel":
        if data.get("format") != FORMAT_NAME:
            raise FormatError(f"not an n-gram model file (format={data.get('format')!r})")
        if data.get("version") != FORMAT_VERSION:
            raise FormatError(f"unsupported n-gram model version {data.get('version')!r}")
        counts, totals = [], []
        for level in data["counts"]:
            table = {tuple(ctx): {t: int(c) for t, c in targets.items()} for ctx, targets in level}
            counts.append(table)
            totals.append({ctx: sum(t.values()) for ctx, t in table.items()})
        return cls(
            order=int(data["order"]),
            mode=data["mode"],
            lambdas=tuple(float(x) for x in data["lambdas"]),
            alpha=float(data["alpha"]),
            inventory=tuple(data["inventory"]),
            known=frozenset(data["known"]),
            counts=counts,
            totals=totals,
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "NGramModel":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid JSON: {exc}", path=path) from exc
        return cls.from_dict(data)


def _check_lambdas(lambdas: Sequence[float], order: int) -> tuple[float, ...]:
    lambdas = tuple(float(x) for x in lambdas)
    if len(lambdas) != order:
        raise SurprisalLabError(f"need {order} interpolation weights, got {len(lambdas)}")
    if any(x < 0 for x in lambdas) or abs(sum(lambdas) - 1.0) > 1e-12:
        raise SurprisalLabError(f"interpolation weights must be >= 0 and sum to 1: {lambdas}")
    return lambdas


def train_ngram(
    corpus: Sequence[TaggedSentence],
    order: int = 3,
    mode: str = "word",
    vocab: Vocabulary | None = None,
    lambdas: Sequence[float] | None = None,
    alpha: float = 0.1,
) -> NGramModel:
    """Count n-grams of every order up to ``order`` over boundary-padded
    sentences (order-1 ``<s>`` symbols in front, one ``</s>`` at the end)."""
    if not 1 <= order <= 5:
        raise SurprisalLabError(f"order must be in [1, 5], got {order}")
    if mode not in MODES:
        raise SurprisalLabError(f"mode must be one of {MODES}, got {mode!r}")
    if not corpus:
        raise SurprisalLabError("cannot train on an empty corpus")
    if alpha < 0:
        raise SurprisalLabError("alpha must be >= 0")
    lambdas = _check_lambdas(lambdas if lambdas is not None else [1.0 / order] * order, order)

    if mode == "word":
        known = vocab.known if vocab is not None else frozenset(w for s in corpus for w in s.tokens)
        sequences = [[w if w in known else UNK for w in s.tokens] for s in corpus]
    else:
        known = frozenset()
        sequences = [list(s.tags) for s in corpus]
    units = set(u for seq in sequences for u in seq) | set(known)
    inventory = tuple(sorted(units | {UNK, EOS}))

    counts = [defaultdict(lambda: defaultdict(int)) for _ in range(order)]
    pad = [BOS] * (order - 1)
    for seq in sequences:
        padded = pad + seq + [EOS]
        for i in range(order - 1, len(padded)):
            target = padded[i]
            for k in range(order):
                counts[k][tuple(padded[i - k:i])][target] += 1
    plain = [{ctx: dict(t) for ctx, t in level.items()} for level in counts]
    totals = [{ctx: sum(t.values()) for ctx, t in level.items()} for level in plain]
    return NGramModel(order, mode, lambdas, float(alpha), inventory, frozenset(known), plain, totals)


def ngram_prob(model: NGramModel, context: Sequence[str], target: str) -> float:
    return model.prob(context, target)


def surprisal(p: float, base: float = 2.0) -> float:
    """-log_base p; infinite for p == 0."""
    if p <= 0.0:
        return math.inf
    return -math.log(p) / math.log(base)


def ngram_surprisal(
    model: NGramModel,
    sentence: TaggedSentence | Sequence[str],
    base: float = 2.0,
    include_end: bool = False,
) -> list[float]:
    units = model.units_of(sentence)
    targets = units + [EOS] if include_end else units
    history: list[str] = []
    out = []
    for unit in targets:
        out.append(surprisal(model.prob(history, unit), base))
        history.append(unit)
    return out
