import math

import pytest

from surprisal_lab.corpus import TaggedSentence, build_vocab
from surprisal_lab.errors import FormatError, GrammarError, ParseError, SurprisalLabError
from surprisal_lab.ngram import train_ngram
from surprisal_lab.pcfg import parse_grammar_text
from surprisal_lab.stimuli import (
    CLASSES,
    FEATURES,
    TABLE_HEADER,
    StimulusTrial,
    SurprisalTable,
    class_counts,
    classify_sentence,
    generate_toy_stimuli,
    load_stimuli,
    score_stimuli,
    write_stimuli,
)
from surprisal_lab.toy import design_grammar

HEADER = "id,condition,phrase_type,tokens,hp_start\n"


def _write(tmp_path, body):
    path = tmp_path / "stimuli.csv"
    path.write_text(HEADER + body, encoding="utf-8")
    return path


def test_load_full_layout(tmp_path):
    lines = []
    for label in CLASSES:
        condition, phrase = label.rsplit("-", 1)
        for k in range(30):
            lines.append(f"{label}-{k},{condition},{phrase},forse ora la porta è aperta,2\n")
    trials = load_stimuli(_write(tmp_path, "".join(lines)))
    assert len(trials) == 150
    assert class_counts(trials) == {c: 30 for c in CLASSES}


def test_weak_vp_rejected(tmp_path):
    path = _write(tmp_path, "a,Strong_PRED,NP,x la porta y,1\nb,Weak_PRED,VP,x la porta y,1\n")
    with pytest.raises(FormatError, match="Weak_PRED-VP is impossible") as info:
        load_stimuli(path)
    assert ":3:" in str(info.value)


def test_hp_at_last_token_rejected(tmp_path):
    with pytest.raises(FormatError, match="no second HP word"):
        load_stimuli(_write(tmp_path, "a,UNPRED,NP,x la porta,2\n"))


@pytest.mark.parametrize(
    "row, message",
    [
        ("a,Maybe,NP,x la porta,1\n", "unknown condition"),
        ("a,UNPRED,AP,x la porta,1\n", "unknown phrase type"),
        ("a,UNPRED,NP,x la porta,one\n", "hp_start must be an integer"),
    ],
)
def test_bad_rows(tmp_path, row, message):
    with pytest.raises(FormatError, match=message):
        load_stimuli(_write(tmp_path, row))


def test_missing_column(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("id,condition,tokens,hp_start\na,UNPRED,x y z,0\n", encoding="utf-8")
    with pytest.raises(FormatError, match="phrase_type"):
        load_stimuli(path)


def test_write_load_round_trip(tmp_path, toy_trials):
    path = tmp_path / "s.csv"
    write_stimuli(toy_trials, path)
    assert load_stimuli(path) == toy_trials


def test_toy_layout(toy_trials):
    assert len(toy_trials) == 150
    assert class_counts(toy_trials) == {c: 30 for c in CLASSES}
    assert len({t.id for t in toy_trials}) == 150
    assert len({t.tokens for t in toy_trials}) == 150


def test_toy_generation_deterministic():
    g = design_grammar()
    a = generate_toy_stimuli(g, per_class=1, seed=5)
    b = generate_toy_stimuli(g, per_class=1, seed=5)
    assert a == b and len(a) == 5


def test_unpred_pairs_share_prefix(toy_trials):
    by_id = {t.id: t for t in toy_trials}
    for k in range(1, 31):
        np_t, vp_t = by_id[f"UNPRED-NP-{k:03d}"], by_id[f"UNPRED-VP-{k:03d}"]
        h = np_t.hp_start
        assert vp_t.hp_start == h
        assert np_t.tokens[: h + 2] == vp_t.tokens[: h + 2]
        assert np_t.tags[h:h + 2] == ("Det", "N") and vp_t.tags[h:h + 2] == ("Cl", "V")


def test_generated_conditions_agree_with_classifier(toy_trials):
    g = design_grammar()
    for t in toy_trials[::7]:
        condition, readings = classify_sentence(g, t.tokens, t.hp_start)
        assert condition == t.condition
        assert t.phrase_type in readings


def test_missing_homograph_is_explained():
    g = parse_grammar_text("""
        S -> A Det N 0.5 | A Cl V 0.5
        A -> forse
        Det -> la
        Cl -> lo
        N -> porta
        V -> porta
    """)
    with pytest.raises(GrammarError, match="Det/Cl homograph"):
        generate_toy_stimuli(g, per_class=1)
    g2 = parse_grammar_text("""
        S -> A Det N 0.5 | A Cl V 0.5
        A -> forse
        Det -> la
        Cl -> la
        N -> porta
        V -> vede
    """)
    with pytest.raises(GrammarError, match="N/V homograph"):
        generate_toy_stimuli(g2, per_class=1)


def test_table_shape_and_values(toy_trials, toy_table):
    assert len(toy_table) == len(toy_trials)
    assert toy_table.matrix().shape == (150, 8)
    assert toy_table.class_counts() == class_counts(toy_trials)
    for row in toy_table:
        assert all(math.isfinite(v) and v >= 0 for v in row.values)


def test_unpred_ngram_identical_across_phrase_types(toy_table):
    rows = {r.trial_id: r for r in toy_table}
    for k in range(1, 31):
        a, b = rows[f"UNPRED-NP-{k:03d}"], rows[f"UNPRED-VP-{k:03d}"]
        # every measure is a function of the shared prefix except POS, which reads the tags
        for feature in ("ngram_w1", "ngram_w2", "lex_w1", "lex_w2", "syn_w1", "syn_w2"):
            assert a[feature] == b[feature]


def test_syntactic_surprisal_orders_predictability(toy_table):
    means = {
        label: sum(toy_table.values("syn_w1", label)) / 30
        for label in ("Strong_PRED-NP", "Weak_PRED-NP", "UNPRED-NP")
    }
    assert means["Weak_PRED-NP"] < means["UNPRED-NP"] < means["Strong_PRED-NP"]


def test_deterministic_grammar_gives_zero_surprisal():
    g = parse_grammar_text("""
        S -> A D N V
        A -> forse
        D -> la
        N -> porta
        V -> cade
    """)
    tokens = ("forse", "la", "porta", "cade")
    corpus = [TaggedSentence(tokens, ("A", "D", "N", "V"))] * 3
    vocab = build_vocab(corpus, 1)
    word = train_ngram(corpus, 3, "word", vocab, lambdas=[0, 0, 1], alpha=0.0)
    pos = train_ngram(corpus, 3, "pos", lambdas=[0, 0, 1], alpha=0.0)
    trial = StimulusTrial("t1", "Strong_PRED", "NP", tokens, 1, ("A", "D", "N", "V"))
    (row,) = score_stimuli([trial], word, pos, g).rows
    assert row.values == (0.0,) * 8


def test_scoring_error_names_trial(toy_models):
    trial = StimulusTrial("bad-7", "UNPRED", "NP", ("la", "porta", "Maria", "Maria", "Maria"), 0)
    with pytest.raises(ParseError, match="trial bad-7"):
        score_stimuli([trial], *toy_models)


def test_tags_inferred_when_missing(toy_trials, toy_models):
    t = toy_trials[0]
    untagged = StimulusTrial(t.id, t.condition, t.phrase_type, t.tokens, t.hp_start)
    (a,) = score_stimuli([t], *toy_models).rows
    (b,) = score_stimuli([untagged], *toy_models).rows
    assert a.values == b.values


def test_table_csv_round_trip(tmp_path, toy_table):
    path = tmp_path / "t.csv"
    toy_table.to_csv(path)
    assert path.read_text().splitlines()[0] == ",".join(TABLE_HEADER)
    back = SurprisalTable.read_csv(path)
    assert back.rows == toy_table.rows
    long = tmp_path / "long.csv"
    toy_table.to_long_csv(long)
    assert len(long.read_text().splitlines()) == 1 + 150 * 8


def test_table_bad_header(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("trial_id,condition\n", encoding="utf-8")
    with pytest.raises(FormatError, match="expected header"):
        SurprisalTable.read_csv(path)


def test_trial_validation():
    with pytest.raises(SurprisalLabError, match="2 tags for 3 tokens"):
        StimulusTrial("x", "UNPRED", "NP", ("a", "b", "c"), 0, ("A", "B"))
    assert StimulusTrial("x", "UNPRED", "VP", ("a", "b"), 0).label == "UNPRED-VP"
    assert FEATURES[0] == "ngram_w1" and len(FEATURES) == 8
