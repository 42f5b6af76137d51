"""Nested cross-validation of RBF SVMs over surprisal features and the four
HP classification tasks."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import SurprisalLabError
from .stats import kruskal_wallis, pairwise_report
from .stimuli import NOTIONS, SurprisalTable
from .svm import _encode, solve_dual, squared_distances, standardization

C_GRID = (0.001, 0.01, 0.1, 1.0, 10.0)
GAMMA_GRID = (0.001, 0.01, 0.1, 1.0)
FEATURE_SETS = {notion: (f"{notion}_w1", f"{notion}_w2") for notion in NOTIONS}
FEATURE_SETS["tot"] = tuple(f for pair in FEATURE_SETS.values() for f in pair)

# task name -> (label for each class; classes not listed are left out)
TASKS = {
    "i": {"Strong_PRED-NP": "NP", "Strong_PRED-VP": "VP"},
    "ii": {"Strong_PRED-NP": "NP", "Weak_PRED-NP": "NP", "Strong_PRED-VP": "VP"},
    "iii": {"UNPRED-NP": "NP", "UNPRED-VP": "VP"},
    "iv": {
        "Strong_PRED-NP": "predictable",
        "Strong_PRED-VP": "predictable",
        "Weak_PRED-NP": "predictable",
        "UNPRED-NP": "unpredictable",
        "UNPRED-VP": "unpredictable",
    },
}
TASK_TITLES = {
    "i": "Strong_PRED nouns vs verbs",
    "ii": "predictable nouns vs verbs",
    "iii": "UNPRED nouns vs verbs",
    "iv": "predictable vs unpredictable",
}
RESULTS_HEADER = ("task", "feature_set", "fold", "accuracy", "C", "gamma", "chance")


@dataclass
class CvReport:
    task: str
    feature_set: str
    accuracies: list[float]
    params: list[tuple[float, float]]  # chosen (C, gamma) per outer fold
    chance: float
    label_counts: dict = field(default_factory=dict)

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies))


def chance_level(y) -> float:
    _, counts = np.unique(np.asarray(y), return_counts=True)
    return float(counts.max() / counts.sum())


def stratified_folds(y, folds: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Test-index arrays; each class is shuffled and dealt round-robin so
    every fold keeps the label ratio."""
    y = np.asarray(y)
    if folds < 2:
        raise SurprisalLabError("need at least 2 folds")
    labels, counts = np.unique(y, return_counts=True)
    for label, count in zip(labels, counts):
        if count < folds:
            raise SurprisalLabError(
                f"class {str(label)!r} has {count} members, fewer than {folds} folds; use fewer folds"
            )
    buckets: list[list[int]] = [[] for _ in range(folds)]
    offset = 0
    for label in labels:
        members = rng.permutation(np.flatnonzero(y == label))
        for k, idx in enumerate(members):
            buckets[(offset + k) % folds].append(int(idx))
        offset += len(members)
    return [np.sort(np.array(b, dtype=int)) for b in buckets]


def _fit_predict(D_train, D_test, y_pm, C, gamma, tol, max_iter) -> np.ndarray:
    """Train on a squared-distance matrix and return test decision values."""
    alpha, rho, _ = solve_dual(np.exp(-gamma * D_train), y_pm, C, tol, max_iter)
    return np.exp(-gamma * D_test) @ (alpha * y_pm) - rho


def grid_search(
    X,
    y,
    C_grid: Sequence[float] = C_GRID,
    gamma_grid: Sequence[float] = GAMMA_GRID,
    folds: int = 10,
    seed=0,
    tol: float = 1e-3,
    max_iter: int = 100_000,
) -> tuple[tuple[float, float], np.ndarray, list[tuple[np.ndarray, np.ndarray]]]:
    """Inner loop: mean fold accuracy for every (C, gamma) cell.

    Returns the chosen pair (ties go to the lowest C, then the lowest gamma),
    the accuracy grid, and the per-fold standardization parameters used.
    """
    X = np.asarray(X, dtype=float)
    y_pm, _ = _encode(y)
    C_grid, gamma_grid = sorted(C_grid), sorted(gamma_grid)
    rng = np.random.default_rng(seed)
    acc = np.zeros((len(C_grid), len(gamma_grid)))
    scalers = []
    splits = stratified_folds(y_pm, folds, rng)
    for test in splits:
        train = np.setdiff1d(np.arange(len(y_pm)), test)
        mean, std = standardization(X[train])
        scalers.append((mean, std))
        Ztr, Zte = (X[train] - mean) / std, (X[test] - mean) / std
        D_train, D_test = squared_distances(Ztr, Ztr), squared_distances(Zte, Ztr)
        for a, C in enumerate(C_grid):
            for b, gamma in enumerate(gamma_grid):
                scores = _fit_predict(D_train, D_test, y_pm[train], C, gamma, tol, max_iter)
                acc[a, b] += np.mean(np.where(scores > 0, 1.0, -1.0) == y_pm[test])
    acc /= len(splits)
    # argmax over a C-major, gamma-minor flattening picks the lowest pair on ties
    a, b = np.unravel_index(int(np.argmax(acc)), acc.shape)
    return (C_grid[a], gamma_grid[b]), acc, scalers


def nested_cv(
    X,
    y,
    C_grid: Sequence[float] = C_GRID,
    gamma_grid: Sequence[float] = GAMMA_GRID,
    seed: int = 0,
    folds: int = 10,
    inner_folds: int = 10,
    tol: float = 1e-3,
    max_iter: int = 100_000,
    task: str = "",
    feature_set: str = "",
) -> CvReport:
    """Stratified outer folds; in each, an inner grid search on the training
    split chooses (C, gamma), then a fresh model is fit on the whole training
    split and scored on the held-out fold."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise SurprisalLabError("X must be a 2-D array with one row per label")
    y_pm, _ = _encode(y)
    outer = stratified_folds(y, folds, np.random.default_rng(seed))
    accuracies, params = [], []
    for k, test in enumerate(outer):
        train = np.setdiff1d(np.arange(y.size), test)
        (C, gamma), _, _ = grid_search(
            X[train], y[train], C_grid, gamma_grid, inner_folds, [seed, k], tol, max_iter
        )
        mean, std = standardization(X[train])
        Ztr, Zte = (X[train] - mean) / std, (X[test] - mean) / std
        scores = _fit_predict(
            squared_distances(Ztr, Ztr), squared_distances(Zte, Ztr), y_pm[train], C, gamma, tol, max_iter
        )
        accuracies.append(float(np.mean(np.where(scores > 0, 1.0, -1.0) == y_pm[test])))
        params.append((float(C), float(gamma)))
    labels, counts = np.unique(y, return_counts=True)
    return CvReport(
        task, feature_set, accuracies, params, chance_level(y),
        {str(l): int(c) for l, c in zip(labels, counts)},
    )


def task_data(table: SurprisalTable, task: str, features: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    if task not in TASKS:
        raise SurprisalLabError(f"unknown task {task!r}; choose from {', '.join(TASKS)}")
    mapping = TASKS[task]
    counts = table.class_counts()
    missing = [c for c in mapping if counts.get(c, 0) == 0]
    if missing:
        raise SurprisalLabError(f"task {task} ({TASK_TITLES[task]}) needs class(es) {', '.join(missing)}")
    rows = [r for r in table.rows if r.label in mapping]
    y = np.array([mapping[r.label] for r in rows])
    return table.matrix(features, rows), y


def run_tasks(
    table: SurprisalTable,
    seed: int = 0,
    tasks: Sequence[str] = tuple(TASKS),
    feature_sets: Sequence[str] = tuple(FEATURE_SETS),
    folds: int = 10,
    C_grid: Sequence[float] = C_GRID,
    gamma_grid: Sequence[float] = GAMMA_GRID,
) -> list[CvReport]:
    reports = []
    for task in tasks:
        for name in feature_sets:
            X, y = task_data(table, task, FEATURE_SETS[name])
            reports.append(
                nested_cv(X, y, C_grid, gamma_grid, seed, folds, folds, task=task, feature_set=name)
            )
    return reports


def compare_feature_sets(reports: Sequence[CvReport], alpha: float = 0.05) -> dict:
    """Kruskal-Wallis over fold accuracies of one task's feature sets, then
    Holm-corrected Conover pairs."""
    names = [r.feature_set for r in reports]
    groups = [r.accuracies for r in reports]
    omnibus = kruskal_wallis(groups)
    entries, conover = pairwise_report(groups, alpha)
    return {
        "feature_sets": names,
        "means": {r.feature_set: r.mean for r in reports},
        "kruskal_wallis": {"H": omnibus.statistic, "df": omnibus.df, "p": omnibus.p_value},
        "pairs": [
            {
                "a": names[e.pair[0]],
                "b": names[e.pair[1]],
                "raw_p": e.raw_p,
                "adjusted_p": e.adjusted_p,
                "reject": e.reject,
                "stars": e.stars,
            }
            for e in entries
        ],
        "notes": conover.notes
        + ["fold accuracies share training data across folds, so they are not independent samples; treat p-values as descriptive"],
    }


def write_results(reports: Sequence[CvReport], path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULTS_HEADER)
        for r in reports:
            for k, (acc, (C, gamma)) in enumerate(zip(r.accuracies, r.params), start=1):
                writer.writerow([r.task, r.feature_set, k, repr(acc), repr(C), repr(gamma), repr(r.chance)])


def read_results(path) -> list[CvReport]:
    cells: dict[tuple[str, str], CvReport] = {}
    with Path(path).open(encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            key = (row["task"], row["feature_set"])
            rep = cells.setdefault(key, CvReport(key[0], key[1], [], [], float(row["chance"])))
            rep.accuracies.append(float(row["accuracy"]))
            rep.params.append((float(row["C"]), float(row["gamma"])))
    return list(cells.values())

