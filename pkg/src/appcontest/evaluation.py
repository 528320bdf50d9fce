"""Rolling-origin backtests, metrics and feature-subset ablations."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .features import A_POSITIVE, CLASS_NAMES, FeatureMatrix, subset_label
from .model import (
    ForestParams,
    fit_forest,
    fit_tree,
    last_baseline,
    predict_class,
    predict_value,
)
from .textmine import ConfigError

MODELS = ("rf", "dt", "last")


@dataclass(frozen=True)
class EvalScheme:
    train_weeks: int = 10
    step: int = 1
    horizon: int = 1
    strict_forecast: bool = False

    def __post_init__(self) -> None:
        if self.train_weeks < 1:
            raise ConfigError("train_weeks must be >= 1")
        if self.step != 1 or self.horizon != 1:
            raise ConfigError("only step=1 and horizon=1 are supported")

    def min_windows(self) -> int:
        return self.train_weeks + 1 + int(self.strict_forecast)


@dataclass
class Fold:
    t: int
    train: tuple[int, int]  # inclusive window range
    test: int
    cr_true: int
    cr_pred: int
    cr_prob: float  # fraction of votes for APositive
    ci_true: float
    ci_pred: float
    error: str | None = None

    def to_dict(self) -> dict:
        return {"t": self.t, "train": list(self.train), "test": self.test,
                "cr_true": CLASS_NAMES[self.cr_true], "cr_pred": CLASS_NAMES[self.cr_pred],
                "cr_prob": self.cr_prob, "ci_true": self.ci_true, "ci_pred": self.ci_pred,
                "error": self.error}


def classification_metrics(preds: Sequence[int], truths: Sequence[int],
                           positive: int = A_POSITIVE) -> tuple[float, float, float, float]:
    """Accuracy, precision, recall and F-measure; zero denominators give 0."""
    preds, truths = list(preds), list(truths)
    if len(preds) != len(truths):
        raise ValueError("preds and truths differ in length")
    if not preds:
        return 0.0, 0.0, 0.0, 0.0
    tp = sum(1 for p, t in zip(preds, truths) if p == positive and t == positive)
    fp = sum(1 for p, t in zip(preds, truths) if p == positive and t != positive)
    fn = sum(1 for p, t in zip(preds, truths) if p != positive and t == positive)
    correct = sum(1 for p, t in zip(preds, truths) if p == t)
    accuracy = correct / len(preds)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return accuracy, precision, recall, f


def rmse(preds: Sequence[float], truths: Sequence[float]) -> float:
    preds, truths = list(preds), list(truths)
    if len(preds) != len(truths):
        raise ValueError("preds and truths differ in length")
    if not preds:
        return 0.0
    return math.sqrt(math.fsum((p - t) ** 2 for p, t in zip(preds, truths)) / len(preds))


@dataclass
class EvalReport:
    name: str
    model: str
    folds: list[Fold]
    columns: int
    metrics: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.metrics:
            self.metrics = self.compute_metrics()

    @property
    def errors(self) -> list[Fold]:
        return [f for f in self.folds if f.error]

    def compute_metrics(self) -> dict:
        ok = [f for f in self.folds if not f.error]
        acc, prec, rec, f1 = classification_metrics([f.cr_pred for f in ok],
                                                    [f.cr_true for f in ok])
        return {"accuracy": acc, "precision": prec, "recall": rec, "f_measure": f1,
                "rmse": rmse([f.ci_pred for f in ok], [f.ci_true for f in ok]),
                "folds": len(self.folds), "failed_folds": len(self.folds) - len(ok)}

    def to_dict(self) -> dict:
        return {"name": self.name, "model": self.model, "columns": self.columns,
                "metrics": self.metrics, "folds": [f.to_dict() for f in self.folds]}

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        by_name = {v: k for k, v in CLASS_NAMES.items()}
        folds = [Fold(f["t"], tuple(f["train"]), f["test"], by_name[f["cr_true"]],
                      by_name[f["cr_pred"]], f["cr_prob"], f["ci_true"], f["ci_pred"],
                      f.get("error")) for f in d["folds"]]
        return cls(d["name"], d["model"], folds, d["columns"], dict(d["metrics"]))


def _aligned(matrix: FeatureMatrix, scheme: EvalScheme) -> tuple[np.ndarray, FeatureMatrix]:
    """Feature rows paired with each label window.

    Nowcasting pairs window w's features with window w's labels. With
    ``strict_forecast`` window w's labels are paired with window w-1's
    features and window 0 is dropped.
    """
    if not scheme.strict_forecast:
        return np.arange(matrix.n_windows), matrix
    shifted = FeatureMatrix(matrix.columns, matrix.granularity, matrix.source,
                            matrix.X[:-1], matrix.labels.take(slice(1, None)))
    return np.arange(1, matrix.n_windows), shifted


def rolling_evaluate(matrix: FeatureMatrix, scheme: EvalScheme = EvalScheme(),
                     params: ForestParams = ForestParams(), model: str = "rf",
                     name: str | None = None, threads: int = 1) -> EvalReport:
    """Train on ``train_weeks`` consecutive windows, test on the next one, slide by one.

    Fold ``t`` trains on windows ``t-train_weeks+1 .. t`` and predicts
    ``t+1``, for ``t = train_weeks-1 .. T-2``. ``model`` is ``rf`` (random
    forest classifier and regressor), ``dt`` (single trees) or ``last``.
    """
    if model not in MODELS:
        raise ConfigError(f"model must be one of {MODELS}, got {model!r}")
    if matrix.n_windows < scheme.min_windows():
        raise ValueError(f"rolling evaluation needs at least {scheme.min_windows()} windows "
                         f"(train_weeks={scheme.train_weeks}), got {matrix.n_windows}")
    windows, m = _aligned(matrix, scheme)
    if model != "last" and m.X.shape[1] == 0:
        raise ConfigError("feature matrix has no columns")
    X, labels = m.X, m.labels
    k = scheme.train_weeks
    folds = []
    for t in range(k - 1, len(windows) - 1):
        train = np.arange(t - k + 1, t + 1)
        test = t + 1
        fold = Fold(int(windows[t]), (int(windows[train[0]]), int(windows[train[-1]])),
                    int(windows[test]), int(labels.cr[test]), 0, 0.0,
                    float(labels.ci[test]), 0.0)
        try:
            if model == "last":
                fold.cr_pred = int(last_baseline(labels.cr[train]))
                fold.ci_pred = float(last_baseline(labels.ci[train]))
                fold.cr_prob = float(fold.cr_pred == A_POSITIVE)
            elif model == "dt":
                clf = fit_tree(X[train], labels.cr[train], params.tree_for("gini"))
                reg = fit_tree(X[train], labels.ci[train], params.tree_for("variance"))
                fold.cr_pred = int(clf.predict_one(X[test]))
                fold.cr_prob = float(fold.cr_pred == A_POSITIVE)
                fold.ci_pred = min(max(float(reg.predict_one(X[test])), 0.0), 1.0)
            else:
                clf = fit_forest(X[train], labels.cr[train], params.for_task("gini"),
                                 threads=threads)
                reg = fit_forest(X[train], labels.ci[train], params.for_task("variance"),
                                 threads=threads)
                fold.cr_pred, probs = predict_class(clf, X[test])
                fold.cr_prob = float(probs[A_POSITIVE])
                fold.ci_pred = predict_value(reg, X[test])
        except Exception as exc:  # a failed fold is reported, not fatal
            fold.error = f"{type(exc).__name__}: {exc}"
        folds.append(fold)
    return EvalReport(name or model, model, folds, int(X.shape[1]))


def ablation_run(matrix: FeatureMatrix, subsets: Iterable[Iterable[str] | str],
                 scheme: EvalScheme = EvalScheme(), params: ForestParams = ForestParams(),
                 threads: int = 1, include_last: bool = True) -> list[EvalReport]:
    """One random-forest evaluation per feature subset, plus the Last baseline."""
    reports = []
    for subset in subsets:
        label = subset_label(subset)
        reports.append(rolling_evaluate(matrix.project(subset), scheme, params, "rf",
                                        name=label, threads=threads))
    if include_last:
        reports.append(rolling_evaluate(matrix, scheme, params, "last", name="Last"))
    return reports


def comparison_table(reports: Sequence[EvalReport]) -> list[dict]:
    return [{"configuration": r.name, "model": r.model, "columns": r.columns, **r.metrics}
            for r in reports]


TABLE_FIELDS = ["configuration", "model", "columns", "accuracy", "precision", "recall",
                "f_measure", "rmse", "folds", "failed_folds"]


def table_csv(rows: Sequence[dict], comment: str | None = None) -> str:
    buf = io.StringIO()
    if comment:
        buf.write(f"# {comment}\n")
    writer = csv.DictWriter(buf, TABLE_FIELDS, lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()


def folds_csv(report: EvalReport, comment: str | None = None) -> str:
    buf = io.StringIO()
    if comment:
        buf.write(f"# {comment}\n")
    fields = ["configuration", "t", "train_start", "train_end", "test", "cr_true", "cr_pred",
              "cr_prob", "ci_true", "ci_pred", "error"]
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fields)
    for f in report.folds:
        writer.writerow([report.name, f.t, f.train[0], f.train[1], f.test,
                         CLASS_NAMES[f.cr_true], CLASS_NAMES[f.cr_pred], repr(f.cr_prob),
                         repr(f.ci_true), repr(f.ci_pred), f.error or ""])
    return buf.getvalue()


def dumps(obj) -> str:
    """Canonical JSON used for every written artifact."""
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
