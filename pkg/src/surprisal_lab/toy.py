"""The bundled toy design: a small Italian-like grammar with article/clitic
and noun/verb homographs, plus a corpus and treebank sampled from it."""

from __future__ import annotations

import shutil
from importlib import resources
from pathlib import Path

from .corpus import Treebank, write_tagged_corpus
from .pcfg import Pcfg, parse_grammar_file, sample_trees

BUNDLE_FILES = ("design.pcfg", "heads.txt", "corpus.tsv", "treebank.txt", "config.json")
TRAINING_SIZE = 2000
TRAINING_SEED = 1


def bundle_dir() -> Path:
    return Path(str(resources.files("surprisal_lab") / "data" / "toy"))


def bundle_path(name: str) -> Path:
    return bundle_dir() / name


def design_grammar() -> Pcfg:
    return parse_grammar_file(bundle_path("design.pcfg"), strict=True)


def sample_training_data(grammar: Pcfg, n: int = TRAINING_SIZE, seed: int = TRAINING_SEED) -> Treebank:
    return Treebank(sample_trees(grammar, n, seed=seed))


def write_training_data(treebank: Treebank, out_dir) -> tuple[Path, Path]:
    """Write ``corpus.tsv`` (token<TAB>tag) and ``treebank.txt`` (one
    bracketed tree per line)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    corpus, trees = out_dir / "corpus.tsv", out_dir / "treebank.txt"
    write_tagged_corpus(treebank.tagged_sentences(), corpus)
    trees.write_text(treebank.to_text(), encoding="utf-8")
    return corpus, trees


def copy_bundle(out_dir) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name in BUNDLE_FILES:
        shutil.copyfile(bundle_path(name), out_dir / name)
    return out_dir


def regenerate_bundle(out_dir=None) -> None:
    """Rebuild the shipped corpus and treebank from the design grammar."""
    target = bundle_dir() if out_dir is None else Path(out_dir)
    write_training_data(sample_training_data(design_grammar()), target)
