import pytest
from hypothesis import given
from hypothesis import strategies as st

from surprisal_lab.corpus import (
    UNK,
    TaggedSentence,
    Tree,
    Treebank,
    build_vocab,
    parse_tree,
    parse_treebank_text,
    read_tagged_corpus,
    read_treebank,
    write_tagged_corpus,
)
from surprisal_lab.errors import FormatError, SurprisalLabError


def test_read_single_sentence(tmp_path):
    path = tmp_path / "c.tsv"
    path.write_text("the\tDet\nbook\tN\n\n", encoding="utf-8")
    assert read_tagged_corpus(path) == [TaggedSentence(("the", "book"), ("Det", "N"))]


def test_blank_line_separates_sentences(tmp_path):
    path = tmp_path / "c.tsv"
    path.write_text("the\tDet\nbook\tN\n\na\tDet\nbooks\tN\nread\tV\n", encoding="utf-8")
    sents = read_tagged_corpus(path)
    assert [len(s) for s in sents] == [2, 3]


def test_space_instead_of_tab_names_line(tmp_path):
    path = tmp_path / "c.tsv"
    path.write_text("the Det\n", encoding="utf-8")
    with pytest.raises(FormatError) as err:
        read_tagged_corpus(path)
    assert err.value.line == 1
    assert ":1:" in str(err.value)


def test_empty_corpus_file(tmp_path):
    path = tmp_path / "c.tsv"
    path.write_text("\n\n", encoding="utf-8")
    with pytest.raises(FormatError):
        read_tagged_corpus(path)


def test_corpus_write_read_roundtrip(tmp_path):
    sents = [TaggedSentence(("a", "b"), ("X", "Y")), TaggedSentence(("c",), ("Z",))]
    write_tagged_corpus(sents, tmp_path / "c.tsv")
    assert read_tagged_corpus(tmp_path / "c.tsv") == sents


def test_tree_yield():
    tree = parse_tree("(S (NP (Det the) (N book)) (VP (V reads)))")
    assert tree.leaves() == ["the", "book", "reads"]
    assert tree.preterminals() == ["Det", "N", "V"]


def test_tree_yield_length_five():
    tree = parse_tree("(S (NP (Det a) (N books)) (VP (V read) (NP (Det the) (N book))))")
    assert len(tree.leaves()) == 5


@pytest.mark.parametrize(
    "text",
    ["(S (NP (Det the)", "(S (A a)))", "( (A a))", "(S)", "(S (A a) b)", ""],
)
def test_malformed_trees(text):
    with pytest.raises(FormatError):
        parse_tree(text)


def test_treebank_error_carries_line(tmp_path):
    path = tmp_path / "t.txt"
    path.write_text("(S (A a))\n(S (A a)\n", encoding="utf-8")
    with pytest.raises(FormatError) as err:
        read_treebank(path)
    assert err.value.line == 2


def test_vocab_threshold():
    corpus = [TaggedSentence(("the", "zyx"), ("D", "N")), TaggedSentence(("the", "the"), ("D", "D"))]
    vocab = build_vocab(corpus, 2)
    assert "the" in vocab and "zyx" not in vocab
    assert UNK not in vocab.known
    assert vocab.tags == {"D", "N"}
    assert vocab.map_sentence(["the", "zyx"]) == ("the", UNK)
    assert build_vocab(corpus, 1).known == {"the", "zyx"}


def test_vocab_errors():
    with pytest.raises(SurprisalLabError):
        build_vocab([], 2)
    with pytest.raises(SurprisalLabError):
        build_vocab([TaggedSentence(("a",), ("A",))], 0)


labels = st.sampled_from(["S", "NP", "VP", "X"])
words = st.sampled_from(["a", "b", "the", "book"])


@st.composite
def trees(draw, depth=3):
    label = draw(labels)
    if depth == 0 or draw(st.booleans()):
        return Tree(label, (draw(words),))
    kids = draw(st.lists(trees(depth=depth - 1), min_size=1, max_size=3))
    return Tree(label, tuple(kids))


@given(st.lists(trees(), min_size=1, max_size=4))
def test_treebank_roundtrip(tree_list):
    bank = Treebank(tree_list)
    again = parse_treebank_text(bank.to_text())
    assert again.trees == bank.trees


@given(st.lists(st.lists(words, min_size=1, max_size=5), min_size=1, max_size=5))
def test_vocab_mapping_idempotent(sentences):
    corpus = [TaggedSentence(tuple(s), tuple("T" for _ in s)) for s in sentences]
    vocab = build_vocab(corpus, 2)
    for s in sentences:
        once = vocab.map_sentence(s)
        assert vocab.map_sentence(once) == once


def test_preterminals_match_tags(tmp_path):
    text = "(S (NP (Det the) (N book)) (VP (V reads)))\n(S (NP (N books)) (VP (V read)))\n"
    bank = parse_treebank_text(text)
    for tree, tagged in zip(bank, bank.tagged_sentences()):
        assert list(tagged.tags) == tree.preterminals()
        assert list(tagged.tokens) == tree.leaves()
