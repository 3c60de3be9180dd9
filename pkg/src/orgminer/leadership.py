"""Ranking-based and classifier-based detection of management roles.

Two routes to the same question, who holds a leadership position:

* rank nodes by a centrality measure and inspect the top of the list
  (precision@k against known labels, plus accounting of managers who do
  not disclose their position), and
* train small classifiers on the eight centrality values of labeled
  nodes and evaluate them with stratified k-fold cross-validation
  (accuracy as a percentage, F1 on the manager class, tie-corrected
  rank-statistic AUC).

Ties in rankings always break toward the smaller node id so every
report is a pure function of (scores, labels, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import stats

from .centrality import MEASURES, CentralityTable
from .classifiers import CLASSIFIER_NAMES, make_classifier


class UnlabeledNodesError(ValueError):
    """Raised when a computation needs labels that were not provided."""

    def __init__(self, nodes: Iterable[int]) -> None:
        self.nodes = tuple(sorted(set(nodes)))
        listing = ", ".join(str(v) for v in self.nodes)
        super().__init__(f"labels required for nodes: {listing}")


@dataclass(frozen=True)
class RankedList:
    measure: str
    entries: tuple[tuple[int, float], ...]

    def __len__(self) -> int:
        return len(self.entries)

    def top(self, k: int) -> tuple[int, ...]:
        if k < 0 or k > len(self.entries):
            raise ValueError(f"k={k} out of range for list of {len(self.entries)}")
        return tuple(node for node, _ in self.entries[:k])


def rank_nodes(table: CentralityTable, measure: str) -> RankedList:
    if measure not in table.scores:
        raise KeyError(f"measure {measure!r} not present in table")
    scores = table.scores[measure]
    ordered = sorted(
        ((v, scores[v]) for v in table.nodes), key=lambda ns: (-ns[1], ns[0])
    )
    return RankedList(measure, tuple((int(n), float(s)) for n, s in ordered))


def precision_at_k(ranked: RankedList, labels: Mapping[int, bool], k: int) -> float:
    if k < 1 or k > len(ranked):
        raise ValueError(f"k={k} out of range for list of {len(ranked)}")
    top = ranked.top(k)
    missing = [v for v in top if v not in labels]
    if missing:
        raise UnlabeledNodesError(missing)
    return sum(1 for v in top if labels[v]) / k


@dataclass(frozen=True)
class HiddenManagerReport:
    """Managers in a top-k list, split by whether they disclose the role."""

    measure: str
    k: int
    managers_in_top_k: int
    hidden_count: int

    @property
    def hidden_fraction(self) -> float:
        if self.managers_in_top_k == 0:
            return 0.0
        return self.hidden_count / self.managers_in_top_k


def hidden_manager_report(
    ranked: RankedList,
    manager_labels: Mapping[int, bool],
    disclosure: Mapping[int, bool],
    k: int = 20,
) -> HiddenManagerReport:
    if k < 1 or k > len(ranked):
        raise ValueError(f"k={k} out of range for list of {len(ranked)}")
    top = ranked.top(k)
    missing = [v for v in top if v not in manager_labels]
    if missing:
        raise UnlabeledNodesError(missing)
    managers = [v for v in top if manager_labels[v]]
    missing_disclosure = [v for v in managers if v not in disclosure]
    if missing_disclosure:
        raise UnlabeledNodesError(missing_disclosure)
    hidden = sum(1 for v in managers if not disclosure[v])
    return HiddenManagerReport(ranked.measure, k, len(managers), hidden)


# -- classifier instances and metrics -------------------------------------------


@dataclass(frozen=True)
class LabeledInstance:
    node: int
    features: tuple[float, ...]
    is_manager: bool


def build_instances(
    table: CentralityTable, manager_labels: Mapping[int, bool]
) -> list[LabeledInstance]:
    """One instance per labeled node, features in MEASURES column order."""
    matrix = table.feature_matrix()
    out: list[LabeledInstance] = []
    for i, node in enumerate(table.nodes):
        if node not in manager_labels:
            continue
        row = tuple(float(x) for x in matrix[i])
        if not all(math.isfinite(x) for x in row):
            raise ValueError(f"non-finite feature for node {node}")
        out.append(LabeledInstance(node, row, bool(manager_labels[node])))
    return out


def instances_to_arrays(
    instances: Sequence[LabeledInstance],
) -> tuple[np.ndarray, np.ndarray]:
    X = np.array([inst.features for inst in instances], dtype=np.float64)
    y = np.array([1 if inst.is_manager else 0 for inst in instances], dtype=np.int64)
    return X, y


def stratified_folds(labels: Sequence[int], folds: int, seed: int) -> np.ndarray:
    """Assign a fold id to every instance, preserving class proportions.

    Each class is shuffled and dealt cyclically; the deal cursor carries
    over between classes so fold sizes also stay within one of each
    other.  Per class, fold counts differ by at most one.
    """
    y = np.asarray(labels)
    n = y.shape[0]
    if folds < 2:
        raise ValueError("need at least 2 folds")
    if n < folds:
        raise ValueError(f"{n} instances cannot fill {folds} folds")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(n, dtype=np.int64)
    cursor = 0
    for cls in np.unique(y):
        idx = rng.permutation(np.flatnonzero(y == cls))
        for j, row in enumerate(idx):
            fold_of[row] = (cursor + j) % folds
        cursor = (cursor + idx.shape[0]) % folds
    return fold_of


def auc_rank_statistic(scores: Sequence[float], labels: Sequence[int]) -> float:
    """AUC as the tie-corrected Mann-Whitney statistic on average ranks."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    positives = int(y.sum())
    negatives = y.shape[0] - positives
    if positives == 0 or negatives == 0:
        raise ValueError("AUC needs both classes present")
    ranks = stats.rankdata(s)
    rank_sum = float(ranks[y == 1].sum())
    return (rank_sum - positives * (positives + 1) / 2.0) / (positives * negatives)


def accuracy_percent(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape[0] == 0:
        raise ValueError("no predictions to score")
    return 100.0 * float((y_true == y_pred).mean())


def f_measure(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    """F1 on the manager (positive) class; 0 when nothing positive is predicted."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    tp = int(((y_true == 1) & (y_pred == 1)).sum())
    fp = int(((y_true == 0) & (y_pred == 1)).sum())
    fn = int(((y_true == 1) & (y_pred == 0)).sum())
    denom = 2 * tp + fp + fn
    if denom == 0:
        return 0.0
    return 2 * tp / denom


@dataclass(frozen=True)
class CrossValidationRow:
    classifier: str
    accuracy: float
    f1: float
    auc: float
    folds: int
    fallback_folds: int
    fold_accuracies: tuple[float, ...]


def cross_validate(
    kind: str,
    instances: Sequence[LabeledInstance],
    folds: int = 10,
    seed: int = 0,
) -> CrossValidationRow:
    """Held-out metrics over a stratified fold split.

    Accuracy and F are pooled counts over all held-out predictions; AUC
    is the mean of per-fold rank AUCs. Per fold, a constant scorer is
    all ties, so its AUC is exactly 0.5; pooling instead would let
    between-fold prevalence differences leak rank information.
    """
    X, y = instances_to_arrays(instances)
    if np.unique(y).size < 2:
        raise ValueError("cross-validation needs both classes present")
    fold_of = stratified_folds(y, folds, seed)
    pooled_pred = np.empty(y.shape[0], dtype=np.int64)
    fallback_folds = 0
    fold_accuracies: list[float] = []
    fold_aucs: list[float] = []
    for f in range(folds):
        test = fold_of == f
        train = ~test
        if np.unique(y[train]).size < 2:
            fallback_folds += 1
        model = make_classifier(kind, seed=seed)
        model.fit(X[train], y[train])
        pooled_pred[test] = model.predict(X[test])
        if test.any():
            fold_accuracies.append(accuracy_percent(y[test], pooled_pred[test]))
            if np.unique(y[test]).size == 2:
                fold_aucs.append(auc_rank_statistic(model.scores(X[test]), y[test]))
    if not fold_aucs:
        raise ValueError(
            "no fold had both classes in its test split; AUC is undefined"
        )
    return CrossValidationRow(
        classifier=kind,
        accuracy=accuracy_percent(y, pooled_pred),
        f1=f_measure(y, pooled_pred),
        auc=float(np.mean(fold_aucs)),
        folds=folds,
        fallback_folds=fallback_folds,
        fold_accuracies=tuple(fold_accuracies),
    )


# -- consolidated evaluation ------------------------------------------------------


@dataclass(frozen=True)
class EvalReport:
    classifier_rows: tuple[CrossValidationRow, ...]
    precision: dict[str, dict[int, float]]
    hidden: HiddenManagerReport


def evaluate(
    table: CentralityTable,
    manager_labels: Mapping[int, bool],
    disclosure: Mapping[int, bool],
    kinds: Sequence[str] = CLASSIFIER_NAMES,
    folds: int = 10,
    seed: int = 0,
    ks: Sequence[int] = (10, 20),
    hidden_k: int = 20,
) -> EvalReport:
    precision: dict[str, dict[int, float]] = {}
    for measure in table.measures:
        ranked = rank_nodes(table, measure)
        precision[measure] = {
            k: precision_at_k(ranked, manager_labels, k) for k in ks
        }
    hidden = hidden_manager_report(
        rank_nodes(table, "cl"), manager_labels, disclosure, k=hidden_k
    )
    instances = build_instances(table, manager_labels)
    rows = tuple(cross_validate(kind, instances, folds, seed) for kind in kinds)
    return EvalReport(rows, precision, hidden)


def precision_table_bytes(precision: Mapping[str, Mapping[int, float]]) -> bytes:
    ks = sorted({k for per in precision.values() for k in per})
    header = "measure," + ",".join(f"p_at_{k}" for k in ks)
    lines = [header]
    for measure in MEASURES:
        if measure not in precision:
            continue
        cells = ",".join(repr(precision[measure][k]) for k in ks)
        lines.append(f"{measure},{cells}")
    return ("\n".join(lines) + "\n").encode()


def classifier_table_bytes(rows: Sequence[CrossValidationRow]) -> bytes:
    lines = ["classifier,accuracy_pct,f_measure,auc,folds,fallback_folds"]
    for row in rows:
        lines.append(
            f"{row.classifier},{row.accuracy!r},{row.f1!r},{row.auc!r},"
            f"{row.folds},{row.fallback_folds}"
        )
    return ("\n".join(lines) + "\n").encode()


def hidden_table_bytes(report: HiddenManagerReport) -> bytes:
    lines = [
        "measure,k,managers_in_top_k,hidden_count,hidden_fraction",
        f"{report.measure},{report.k},{report.managers_in_top_k},"
        f"{report.hidden_count},{report.hidden_fraction!r}",
    ]
    return ("\n".join(lines) + "\n").encode()


# -- labeling the rest of the graph ----------------------------------------------


@dataclass(frozen=True)
class Prediction:
    node: int
    is_manager: bool
    score: float


@dataclass(frozen=True)
class ClassifyAllResult:
    classifier: str
    predictions: tuple[Prediction, ...]
    labeled_total: int
    labeled_managers: int
    management_fraction: float


def classify_all(
    kind: str,
    table: CentralityTable,
    manager_labels: Mapping[int, bool],
    seed: int = 0,
) -> ClassifyAllResult:
    """Train on labeled nodes, predict every unlabeled node.

    The management fraction estimate combines known and predicted
    manager counts over the whole node set.
    """
    labeled = [v for v in table.nodes if v in manager_labels]
    if not labeled:
        raise ValueError("no labeled nodes to train on")
    values = {bool(manager_labels[v]) for v in labeled}
    if len(values) < 2:
        raise ValueError("labeled nodes cover a single class")
    matrix = table.feature_matrix()
    index = {v: i for i, v in enumerate(table.nodes)}
    X_train = matrix[[index[v] for v in labeled]]
    y_train = np.array([1 if manager_labels[v] else 0 for v in labeled])
    model = make_classifier(kind, seed=seed)
    model.fit(X_train, y_train)
    unlabeled = [v for v in table.nodes if v not in manager_labels]
    predictions: list[Prediction] = []
    if unlabeled:
        X_new = matrix[[index[v] for v in unlabeled]]
        pred = model.predict(X_new)
        score = model.scores(X_new)
        predictions = [
            Prediction(v, bool(pred[i]), float(score[i]))
            for i, v in enumerate(unlabeled)
        ]
    known_managers = int(y_train.sum())
    predicted_managers = sum(1 for p in predictions if p.is_manager)
    fraction = (known_managers + predicted_managers) / len(table.nodes)
    return ClassifyAllResult(
        classifier=kind,
        predictions=tuple(predictions),
        labeled_total=len(labeled),
        labeled_managers=known_managers,
        management_fraction=fraction,
    )


# -- optional significance report -------------------------------------------------


@dataclass(frozen=True)
class PairedComparison:
    classifier_a: str
    classifier_b: str
    mean_difference: float
    t_statistic: float
    p_value: float
    significant: bool


def paired_fold_comparison(
    instances: Sequence[LabeledInstance],
    kinds: Sequence[str],
    folds: int = 10,
    seed: int = 0,
    alpha: float = 0.05,
) -> tuple[PairedComparison, ...]:
    """Paired t-test on per-fold accuracies for every classifier pair."""
    rows = {kind: cross_validate(kind, instances, folds, seed) for kind in kinds}
    out: list[PairedComparison] = []
    for i, a in enumerate(kinds):
        for b in kinds[i + 1 :]:
            acc_a = np.asarray(rows[a].fold_accuracies)
            acc_b = np.asarray(rows[b].fold_accuracies)
            diff = acc_a - acc_b
            if np.isclose(float(diff.std()), 0.0):
                # zero variance: flat tie is insignificant, a constant
                # nonzero gap is maximally significant
                if np.isclose(float(diff.mean()), 0.0):
                    t_stat, p_value = 0.0, 1.0
                else:
                    t_stat = math.copysign(math.inf, float(diff.mean()))
                    p_value = 0.0
            else:
                t_stat, p_value = stats.ttest_rel(acc_a, acc_b)
            out.append(
                PairedComparison(
                    a,
                    b,
                    float(diff.mean()),
                    float(t_stat),
                    float(p_value),
                    bool(p_value < alpha),
                )
            )
    return tuple(out)
