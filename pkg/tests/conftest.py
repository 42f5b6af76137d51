import pytest

from surprisal_lab.pcfg import parse_grammar_text

TEXTBOOK_GRAMMAR = """
S -> NP VP
NP -> Det N
VP -> V NP | V
Det -> the | a
N -> book | books
V -> read | reads
"""

# finite-language grammars used by the enumeration oracle
FINITE_GRAMMARS = {
    "textbook": TEXTBOOK_GRAMMAR,
    "weighted": """
        S -> NP VP 0.7 | VP 0.3
        NP -> Det N 0.6 | N 0.4
        VP -> V 0.2 | V NP 0.5 | V NP PP 0.3
        PP -> P N 1.0
        Det -> the 0.5 | a 0.5
        N -> dog 0.4 | cat 0.35 | saw 0.25
        V -> saw 0.6 | ran 0.4
        P -> with 1.0
    """,
    "units": """
        S -> A 0.5 | B 0.3 | a C 0.2
        A -> B 0.4 | a 0.6
        B -> b 0.5 | b b 0.5
        C -> A b 1.0
    """,
    "ambiguous": """
        S -> X Y 0.5 | Y X 0.5
        X -> a 0.5 | a a 0.3 | b 0.2
        Y -> a 0.7 | X 0.3
    """,
    "mixed_terminals": """
        S -> the N V 0.6 | N 0.4
        N -> dog 0.5 | dog dog 0.5
        V -> runs 0.9 | the dog 0.1
    """,
}


@pytest.fixture
def textbook():
    return parse_grammar_text(TEXTBOOK_GRAMMAR)


@pytest.fixture(params=sorted(FINITE_GRAMMARS))
def finite_grammar(request):
    return parse_grammar_text(FINITE_GRAMMARS[request.param])


@pytest.fixture(scope="session")
def toy_trials():
    from surprisal_lab.stimuli import generate_toy_stimuli
    from surprisal_lab.toy import design_grammar

    return generate_toy_stimuli(design_grammar(), per_class=30, seed=0)


@pytest.fixture(scope="session")
def toy_models():
    """Word and POS n-grams and the PCFG trained on the bundled toy data,
    with the bundle's configuration."""
    from surprisal_lab.config import toy_config
    from surprisal_lab.corpus import build_vocab, read_tagged_corpus, read_treebank
    from surprisal_lab.ngram import train_ngram
    from surprisal_lab.pcfg import estimate_pcfg

    config = toy_config()
    corpus = read_tagged_corpus(config.path("corpus"))
    vocab = build_vocab(corpus, config.unk_threshold)
    word = train_ngram(corpus, config.order, "word", vocab, alpha=config.smoothing)
    pos = train_ngram(corpus, config.pos_order, "pos", alpha=config.smoothing)
    pcfg = estimate_pcfg(read_treebank(config.path("treebank")), vocab)
    return word, pos, pcfg


@pytest.fixture(scope="session")
def toy_table(toy_trials, toy_models):
    from surprisal_lab.stimuli import score_stimuli

    return score_stimuli(toy_trials, *toy_models)


def pytest_terminal_summary(terminalreporter):
    lines = [
        value
        for key in ("passed", "failed")
        for report in terminalreporter.stats.get(key, [])
        if report.when == "call"
        for name, value in report.user_properties
        if name == "acceptance"
    ]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda l: int(l.split()[1])):
            terminalreporter.write_line(line)
