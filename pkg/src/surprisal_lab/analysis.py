"""Group comparisons of surprisal values and the human-readable summary."""

from __future__ import annotations

from typing import Sequence

from .classifier import TASK_TITLES, CvReport, compare_feature_sets
from .stats import kruskal_wallis, pairwise_report
from .stimuli import CLASSES, NOTIONS, SurprisalTable

NOTION_NAMES = {"ngram": "word N-gram", "lex": "lexical", "pos": "POS", "syn": "syntactic"}
PREDICTABILITY = {
    "Strong_PRED": ("Strong_PRED-NP", "Strong_PRED-VP"),
    "Weak_PRED": ("Weak_PRED-NP",),
    "UNPRED": ("UNPRED-NP", "UNPRED-VP"),
}


def compare_groups(names: Sequence[str], groups: Sequence[Sequence[float]], alpha: float) -> dict:
    """Kruskal-Wallis plus Holm-corrected Conover pairs; groups that are
    empty are dropped first."""
    kept = [(n, list(g)) for n, g in zip(names, groups) if len(g)]
    out = {"groups": [n for n, _ in kept], "sizes": [len(g) for _, g in kept], "notes": []}
    if len(kept) < 2:
        out["notes"].append("fewer than two non-empty groups; nothing to compare")
        out["kruskal_wallis"] = None
        out["pairwise"] = []
        return out
    values = [g for _, g in kept]
    kw = kruskal_wallis(values)
    entries, conover = pairwise_report(values, alpha)
    out["kruskal_wallis"] = {"H": kw.statistic, "df": kw.df, "p": kw.p_value}
    out["pairwise"] = [
        {
            "a": kept[e.pair[0]][0],
            "b": kept[e.pair[1]][0],
            "raw_p": e.raw_p,
            "adjusted_p": e.adjusted_p,
            "reject": e.reject,
            "stars": e.stars,
        }
        for e in entries
    ]
    out["notes"].extend(conover.notes)
    return out


def analyze_table(table: SurprisalTable, alpha: float = 0.05) -> dict:
    """Per position and notion: the five stimulus classes, the three
    predictability classes, and UNPRED NP vs VP."""
    by_class = table.by_class()
    result = {"alpha": alpha, "class_counts": table.class_counts(), "positions": {}}
    for k in (1, 2):
        position = {}
        for notion in NOTIONS:
            feature = f"{notion}_w{k}"
            col = {c: [r[feature] for r in by_class.get(c, [])] for c in CLASSES}
            pooled = {p: [v for c in members for v in col[c]] for p, members in PREDICTABILITY.items()}
            position[notion] = {
                "classes": compare_groups(CLASSES, [col[c] for c in CLASSES], alpha),
                "predictability": compare_groups(list(pooled), list(pooled.values()), alpha),
                "unpred_np_vs_vp": compare_groups(
                    ["UNPRED-NP", "UNPRED-VP"], [col["UNPRED-NP"], col["UNPRED-VP"]], alpha
                ),
            }
        result["positions"][f"w{k}"] = position
    return result


def separates_all(comparison: dict) -> bool:
    pairs = comparison["pairwise"]
    return bool(pairs) and len(comparison["groups"]) >= 2 and all(p["reject"] for p in pairs)


def summary_lines(stats: dict, reports: Sequence[CvReport] = (), alpha: float = 0.05) -> list[str]:
    lines = ["Surprisal comparisons (Kruskal-Wallis, Conover post-hoc, Holm correction)", ""]
    counts = ", ".join(f"{c}={n}" for c, n in stats["class_counts"].items())
    lines.append(f"trials: {counts}")
    for pos, word in (("w1", "first HP word (article/clitic)"), ("w2", "second HP word (noun/verb)")):
        lines.append("")
        lines.append(f"{word}:")
        for notion in NOTIONS:
            block = stats["positions"][pos][notion]
            pred = block["predictability"]
            if separates_all(pred):
                verdict = "separates all three predictability classes"
            else:
                hits = [f"{p['a']} vs {p['b']}" for p in pred["pairwise"] if p["reject"]]
                verdict = "separates " + ", ".join(hits) if hits else "separates no predictability classes"
            five = block["classes"]
            n_rej = sum(p["reject"] for p in five["pairwise"])
            lines.append(
                f"  {NOTION_NAMES[notion]:>11}: {verdict}; {n_rej}/{len(five['pairwise'])} class pairs differ"
            )
            unp = block["unpred_np_vs_vp"]
            if unp["pairwise"]:
                p = unp["pairwise"][0]
                same = " (identical values)" if unp["notes"] or p["raw_p"] == 1.0 else ""
                tag = "differ" if p["reject"] else "do not differ"
                lines.append(f"  {'':>11}  UNPRED NP vs VP {tag}: p = {p['adjusted_p']:.3g}{same}")
    if reports:
        lines.append("")
        lines.append("Classification (nested cross-validation, mean fold accuracy)")
        for task in dict.fromkeys(r.task for r in reports):
            cell = [r for r in reports if r.task == task]
            lines.append("")
            lines.append(f"task ({task}) {TASK_TITLES.get(task, '')}; chance {cell[0].chance:.2f}")
            for r in cell:
                lines.append(f"  {r.feature_set:>5}: {r.mean:.3f}")
            comparison = compare_feature_sets(cell, alpha)
            better = [f"{p['a']} vs {p['b']} ({p['stars']})" for p in comparison["pairs"] if p["reject"]]
            lines.append("  significant feature-set differences: " + (", ".join(better) if better else "none"))
        lines.append("")
        lines.append("note: fold accuracies are not independent samples; the feature-set tests are descriptive")
    return lines
