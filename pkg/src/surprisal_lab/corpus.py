"""Readers for tagged corpora and bracketed treebanks, plus vocabularies.

Tagged corpus format: one ``token<TAB>tag`` per line, a blank line between
sentences. Treebank format: one bracketed tree per line, e.g.
``(S (NP (Det the) (N book)) (VP (V reads)))``.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence, Union

from .errors import FormatError, SurprisalLabError

UNK = "<unk>"
BOS = "<s>"
EOS = "</s>"


@dataclass(frozen=True)
class TaggedSentence:
    tokens: tuple[str, ...]
    tags: tuple[str, ...]

    def __post_init__(self):
        if len(self.tokens) == 0:
            raise SurprisalLabError("a sentence needs at least one token")
        if len(self.tokens) != len(self.tags):
            raise SurprisalLabError(
                f"{len(self.tokens)} tokens but {len(self.tags)} tags"
            )

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]]) -> "TaggedSentence":
        pairs = list(pairs)
        return cls(tuple(w for w, _ in pairs), tuple(t for _, t in pairs))

    def pairs(self) -> list[tuple[str, str]]:
        return list(zip(self.tokens, self.tags))

    def __len__(self):
        return len(self.tokens)


@dataclass(frozen=True)
class Tree:
    """Constituency tree. Children are subtrees or, for preterminals, a
    single surface-form string."""

    label: str
    children: tuple[Union["Tree", str], ...]

    def is_preterminal(self) -> bool:
        return len(self.children) == 1 and isinstance(self.children[0], str)

    def leaves(self) -> list[str]:
        out = []
        for child in self.children:
            if isinstance(child, str):
                out.append(child)
            else:
                out.extend(child.leaves())
        return out

    def preterminals(self) -> list[str]:
        if self.is_preterminal():
            return [self.label]
        out = []
        for child in self.children:
            if isinstance(child, Tree):
                out.extend(child.preterminals())
        return out

    def tagged(self) -> TaggedSentence:
        return TaggedSentence(tuple(self.leaves()), tuple(self.preterminals()))

    def productions(self) -> Iterator[tuple[str, tuple[str, ...]]]:
        """Yield (lhs, rhs) for every node, top-down left-to-right."""
        rhs = tuple(c if isinstance(c, str) else c.label for c in self.children)
        yield self.label, rhs
        for child in self.children:
            if isinstance(child, Tree):
                yield from child.productions()

    def depth(self) -> int:
        """Number of nonterminal levels on the longest root-to-leaf path."""
        return 1 + max(
            (c.depth() for c in self.children if isinstance(c, Tree)), default=0
        )

    def subtrees(self) -> Iterator["Tree"]:
        yield self
        for child in self.children:
            if isinstance(child, Tree):
                yield from child.subtrees()

    def to_bracket(self) -> str:
        parts = [c if isinstance(c, str) else c.to_bracket() for c in self.children]
        return f"({self.label} {' '.join(parts)})"

    def __str__(self):
        return self.to_bracket()


@dataclass(frozen=True)
class Treebank:
    trees: tuple[Tree, ...]

    def __post_init__(self):
        object.__setattr__(self, "trees", tuple(self.trees))

    def __len__(self):
        return len(self.trees)

    def __iter__(self):
        return iter(self.trees)

    def tagged_sentences(self) -> list[TaggedSentence]:
        return [t.tagged() for t in self.trees]

    def to_text(self) -> str:
        return "".join(t.to_bracket() + "\n" for t in self.trees)


@dataclass(frozen=True)
class Vocabulary:
    known: frozenset[str]
    unk_threshold: int
    tags: frozenset[str]
    counts: dict = field(default_factory=dict, compare=False, repr=False)

    def map(self, form: str) -> str:
        return form if form in self.known else UNK

    def map_sentence(self, tokens: Sequence[str]) -> tuple[str, ...]:
        return tuple(self.map(w) for w in tokens)

    def __contains__(self, form):
        return form in self.known


def parse_tagged_text(text: str, path=None) -> list[TaggedSentence]:
    sentences: list[TaggedSentence] = []
    current: list[tuple[str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\r")
        if not line.strip():
            if current:
                sentences.append(TaggedSentence.from_pairs(current))
                current = []
            continue
        cols = line.split("\t")
        if len(cols) != 2 or not cols[0] or not cols[1]:
            raise FormatError(
                f"expected 'token<TAB>tag', got {len(cols)} column(s): {line!r}",
                path=path,
                line=lineno,
            )
        current.append((cols[0], cols[1]))
    if current:
        sentences.append(TaggedSentence.from_pairs(current))
    if not sentences:
        raise FormatError("tagged corpus is empty", path=path)
    return sentences


def read_tagged_corpus(path) -> list[TaggedSentence]:
    path = Path(path)
    return parse_tagged_text(path.read_text(encoding="utf-8"), path=path)


def write_tagged_corpus(sentences: Iterable[TaggedSentence], path) -> None:
    blocks = []
    for s in sentences:
        blocks.append("".join(f"{w}\t{t}\n" for w, t in s.pairs()))
    Path(path).write_text("\n".join(blocks), encoding="utf-8")


_TOKEN = re.compile(r"\(|\)|[^\s()]+")


def parse_tree(text: str, line=None, path=None) -> Tree:
    tokens = _TOKEN.findall(text)
    if not tokens:
        raise FormatError("empty tree", path=path, line=line)
    pos = 0

    def node() -> Tree:
        nonlocal pos
        if tokens[pos] != "(":
            raise FormatError(f"expected '(' but found {tokens[pos]!r}", path=path, line=line)
        pos += 1
        if pos >= len(tokens):
            raise FormatError("unbalanced parentheses", path=path, line=line)
        label = tokens[pos]
        if label in ("(", ")"):
            raise FormatError("empty node label", path=path, line=line)
        pos += 1
        children: list = []
        while True:
            if pos >= len(tokens):
                raise FormatError("unbalanced parentheses: missing ')'", path=path, line=line)
            tok = tokens[pos]
            if tok == ")":
                pos += 1
                break
            if tok == "(":
                children.append(node())
            else:
                children.append(tok)
                pos += 1
        if not children:
            raise FormatError(f"node {label!r} has no children", path=path, line=line)
        has_leaf = any(isinstance(c, str) for c in children)
        if has_leaf and len(children) != 1:
            raise FormatError(
                f"node {label!r} mixes words and subtrees; a preterminal must "
                "dominate exactly one word",
                path=path,
                line=line,
            )
        return Tree(label, tuple(children))

    tree = node()
    if pos != len(tokens):
        raise FormatError("unbalanced parentheses: trailing material", path=path, line=line)
    return tree


def parse_treebank_text(text: str, path=None) -> Treebank:
    trees = [
        parse_tree(line, line=i, path=path)
        for i, line in enumerate(text.splitlines(), start=1)
        if line.strip()
    ]
    if not trees:
        raise FormatError("treebank is empty", path=path)
    return Treebank(tuple(trees))


def read_treebank(path) -> Treebank:
    path = Path(path)
    return parse_treebank_text(path.read_text(encoding="utf-8"), path=path)


def build_vocab(corpus: Sequence[TaggedSentence], unk_threshold: int = 2) -> Vocabulary:
    """Known forms are those seen at least ``unk_threshold`` times; every
    other form maps to ``UNK``."""
    if unk_threshold < 1:
        raise SurprisalLabError(f"unk_threshold must be >= 1, got {unk_threshold}")
    if not corpus:
        raise SurprisalLabError("cannot build a vocabulary from an empty corpus")
    counts = Counter(w for s in corpus for w in s.tokens)
    tags = frozenset(t for s in corpus for t in s.tags)
    known = frozenset(w for w, c in counts.items() if c >= unk_threshold and w != UNK)
    return Vocabulary(known, unk_threshold, tags, dict(counts))
