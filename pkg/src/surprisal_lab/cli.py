"""Command-line entry point: ``surprisal-lab <command> [flags]``."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import __version__
from .analysis import analyze_table, summary_lines
from .classifier import TASKS, compare_feature_sets, read_results, run_tasks, write_results
from .config import PipelineConfig, toy_config
from .corpus import build_vocab, read_tagged_corpus, read_treebank
from .errors import SurprisalLabError
from .ngram import NGramModel, train_ngram
from .pcfg import (
    LexicalizedPcfg,
    estimate_pcfg,
    lexicalize,
    parse_grammar_file,
    read_head_table,
    validate,
    write_head_table,
)
from .stimuli import SurprisalTable, class_counts, generate_toy_stimuli, load_stimuli, score_stimuli, write_stimuli

MODEL_FILES = {
    "word": "word_ngram.json",
    "pos": "pos_ngram.json",
    "pcfg": "pcfg.txt",
    "lexicalized": "lexicalized_pcfg.txt",
    "heads": "heads.txt",
}


def _dump_json(data, path: Path) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _out(config: PipelineConfig) -> Path:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _require(path: Path, what: str) -> Path:
    if not path.exists():
        raise SurprisalLabError(f"{what} not found: {path}")
    return path


def cmd_train(config: PipelineConfig, log=print) -> dict[str, Path]:
    corpus = read_tagged_corpus(_require(config.path("corpus"), "tagged corpus"))
    treebank = read_treebank(_require(config.path("treebank"), "treebank (needed for the PCFG)"))
    heads = read_head_table(_require(config.path("head_table"), "head table"))
    vocab = build_vocab(corpus, config.unk_threshold)
    word = train_ngram(corpus, config.order, "word", vocab, alpha=config.smoothing)
    pos = train_ngram(corpus, config.pos_order, "pos", alpha=config.smoothing)
    pcfg = estimate_pcfg(treebank, vocab)
    lex = lexicalize(treebank, heads, vocab)
    models = _out(config) / "models"
    models.mkdir(exist_ok=True)
    paths = {k: models / v for k, v in MODEL_FILES.items()}
    word.save(paths["word"])
    pos.save(paths["pos"])
    pcfg.save(paths["pcfg"])
    lex.save(paths["lexicalized"])
    write_head_table(heads, paths["heads"])
    log(f"trained on {len(corpus)} sentences, {len(treebank)} trees; {len(vocab.known)} known word forms")
    for name, grammar in (("pcfg", pcfg), ("lexicalized pcfg", lex.grammar)):
        diag = validate(grammar)
        log(f"{name}: {len(grammar.rules)} rules; validation: {'; '.join(diag.lines())}")
    for note in lex.notes:
        log(f"head finding: {note}")
    return paths


def cmd_gen_stimuli(config: PipelineConfig, log=print) -> Path:
    design = parse_grammar_file(_require(config.path("grammar"), "design grammar"), strict=True)
    trials = generate_toy_stimuli(design, config.per_class, config.seed)
    path = _out(config) / "stimuli.csv"
    write_stimuli(trials, path)
    log(f"wrote {len(trials)} trials to {path}: " + ", ".join(f"{c}={n}" for c, n in class_counts(trials).items()))
    return path


def _load_models(config: PipelineConfig):
    models = Path(config.out_dir) / "models"
    paths = {k: _require(models / v, "model file (run 'train' first)") for k, v in MODEL_FILES.items()}
    word = NGramModel.load(paths["word"])
    pos = NGramModel.load(paths["pos"])
    if config.lexicalized:
        grammar = LexicalizedPcfg.load(paths["lexicalized"], read_head_table(paths["heads"]))
    else:
        grammar = parse_grammar_file(paths["pcfg"])
    return word, pos, grammar


def cmd_analyze(config: PipelineConfig, log=print) -> dict:
    word, pos, grammar = _load_models(config)
    trials = load_stimuli(_require(config.path("stimuli"), "stimulus file"))
    table = score_stimuli(trials, word, pos, grammar, config.log_base)
    out = _out(config)
    table.to_csv(out / "surprisal_table.csv")
    table.to_long_csv(out / "surprisal_long.csv")
    stats = analyze_table(table, config.alpha)
    _dump_json(stats, out / "stats.json")
    log(f"scored {len(table)} trials; wrote surprisal_table.csv, surprisal_long.csv, stats.json to {out}")
    return stats


def cmd_classify(config: PipelineConfig, log=print):
    out = Path(config.out_dir)
    table = SurprisalTable.read_csv(_require(out / "surprisal_table.csv", "surprisal table (run 'analyze' first)"))
    reports = run_tasks(
        table, config.seed, folds=config.folds, C_grid=config.c_grid, gamma_grid=config.gamma_grid
    )
    write_results(reports, out / "classification_results.csv")
    comparisons = {task: compare_feature_sets([r for r in reports if r.task == task], config.alpha) for task in TASKS}
    _dump_json(comparisons, out / "classification_summary.json")
    for r in reports:
        log(f"task {r.task:>3} {r.feature_set:>5}: mean accuracy {r.mean:.3f} (chance {r.chance:.2f})")
    return reports


def write_summary(config: PipelineConfig) -> Path:
    out = Path(config.out_dir)
    stats = json.loads((out / "stats.json").read_text(encoding="utf-8"))
    results = out / "classification_results.csv"
    reports = read_results(results) if results.exists() else []
    path = out / "summary.txt"
    path.write_text("\n".join(summary_lines(stats, reports, config.alpha)) + "\n", encoding="utf-8")
    return path


def cmd_demo(config: PipelineConfig, log=print) -> Path:
    start = time.perf_counter()
    config.save(_out(config) / "config.json")
    cmd_train(config, log)
    config = config.replace(stimuli=str(cmd_gen_stimuli(config, log)))
    cmd_analyze(config, log)
    cmd_classify(config, log)
    path = write_summary(config)
    log("")
    log(path.read_text(encoding="utf-8").rstrip())
    log(f"\ndemo finished in {time.perf_counter() - start:.1f} s; outputs in {config.out_dir}")
    return path


COMMANDS = {
    "train": cmd_train,
    "gen-stimuli": cmd_gen_stimuli,
    "analyze": cmd_analyze,
    "classify": cmd_classify,
    "demo": cmd_demo,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="JSON config file; flags override its values")
    common.add_argument("--order", type=int, help="word n-gram order (1-5)")
    common.add_argument("--pos-order", type=int, help="POS n-gram order (1-5)")
    common.add_argument("--log-base", type=float, help="logarithm base for surprisal (default 2: bits)")
    common.add_argument("--unk-threshold", type=int, help="word forms seen fewer times map to <unk>")
    common.add_argument("--smoothing", type=float, help="additive smoothing constant for n-grams")
    common.add_argument("--alpha", type=float, help="significance level (default 0.05)")
    common.add_argument("--seed", type=int)
    common.add_argument("--folds", type=int, help="outer and inner cross-validation folds")
    common.add_argument("--per-class", type=int, help="trials per stimulus class")
    common.add_argument("--out-dir", help="output directory")
    common.add_argument("--corpus", help="tagged corpus (token<TAB>tag, blank line between sentences)")
    common.add_argument("--treebank", help="bracketed trees, one per line")
    common.add_argument("--grammar", help="design grammar for stimulus generation")
    common.add_argument("--head-table", help="head-finding table")
    common.add_argument("--stimuli", help="stimulus CSV")
    common.add_argument("--lexicalized", action="store_true", help="score with the lexicalized PCFG")

    parser = _Parser(prog="surprisal-lab", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "train": "train word/POS n-gram models, a PCFG and a lexicalized PCFG",
        "gen-stimuli": "sample HP stimuli from a design grammar",
        "analyze": "score stimuli and compare surprisal across classes",
        "classify": "nested cross-validated SVMs on the four classification tasks",
        "demo": "run the whole pipeline on the bundled toy design",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text, description=text)
    return parser


def resolve_config(args: argparse.Namespace) -> PipelineConfig:
    values = vars(args).copy()
    command = values.pop("command")
    path = values.pop("config", None)
    if path is not None:
        config = PipelineConfig.load(path)
    elif command == "demo":
        config = toy_config()
    else:
        config = PipelineConfig()
    return config.replace(**values) if values else config


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = resolve_config(args)
        COMMANDS[args.command](config)
    except (SurprisalLabError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - last-resort report
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
