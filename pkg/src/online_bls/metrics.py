"""Prequential classification metrics from a running confusion matrix.

Conventions for partially observed streams: classes that have not appeared
yet (no true samples) are left out of balanced accuracy, and classes that were
neither true nor predicted are left out of macro F1. MCC is 0 when its
denominator vanishes.
"""
import math

import numpy as np

from .errors import EmptyHistory, EmptyMatrix, LabelOutOfRange


class ConfusionMatrix:
    """``counts[true, pred]`` for ``c`` classes."""

    def __init__(self, c):
        if int(c) < 1:
            raise ValueError("need at least one class")
        self.c = int(c)
        self.counts = np.zeros((self.c, self.c), dtype=np.int64)

    @classmethod
    def from_counts(cls, counts):
        counts = np.asarray(counts, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1] or np.any(counts < 0):
            raise ValueError("counts must be a square nonnegative matrix")
        cm = cls(counts.shape[0])
        cm.counts[:] = counts
        return cm

    @classmethod
    def from_labels(cls, true, pred, c):
        cm = cls(c)
        true = np.asarray(true, dtype=np.int64)
        pred = np.asarray(pred, dtype=np.int64)
        for lab in (true, pred):
            if lab.size and (lab.min() < 0 or lab.max() >= c):
                raise LabelOutOfRange(f"labels must lie in [0, {c})")
        np.add.at(cm.counts, (true, pred), 1)
        return cm

    def record(self, true_label, pred_label):
        t, p = int(true_label), int(pred_label)
        if not (0 <= t < self.c and 0 <= p < self.c):
            raise LabelOutOfRange(f"labels ({t}, {p}) outside [0, {self.c})")
        self.counts[t, p] += 1

    @property
    def total(self):
        return int(self.counts.sum())

    def _require(self):
        if self.total == 0:
            raise EmptyMatrix("no samples recorded")

    def oca(self):
        self._require()
        return float(np.trace(self.counts) / self.total)

    def oce(self):
        return 1.0 - self.oca()

    def bacc(self):
        self._require()
        support = self.counts.sum(axis=1)
        seen = support > 0
        return float(np.mean(np.diag(self.counts)[seen] / support[seen]))

    def macro_f1(self):
        self._require()
        tp = np.diag(self.counts).astype(float)
        support = self.counts.sum(axis=1)
        predicted = self.counts.sum(axis=0)
        active = (support > 0) | (predicted > 0)
        recall = np.divide(tp, support, out=np.zeros_like(tp), where=support > 0)
        precision = np.divide(tp, predicted, out=np.zeros_like(tp), where=predicted > 0)
        denom = recall + precision
        f1 = np.divide(2 * recall * precision, denom, out=np.zeros_like(tp), where=denom > 0)
        return float(np.mean(f1[active]))

    def mcc(self):
        """Matthews correlation; the K-class form reduces to the binary one at K = 2."""
        self._require()
        C = self.counts.astype(float)
        s = C.sum()
        correct = np.trace(C)
        t = C.sum(axis=1)
        p = C.sum(axis=0)
        cov_tp = correct * s - t @ p
        cov_pp = s * s - p @ p
        cov_tt = s * s - t @ t
        if cov_pp * cov_tt == 0:
            return 0.0
        return float(cov_tp / math.sqrt(cov_pp * cov_tt))

    def summary(self):
        return {"oca": self.oca(), "oce": self.oce(), "bacc": self.bacc(),
                "f1": self.macro_f1(), "mcc": self.mcc()}


def binary_mcc(tp, tn, fp, fn):
    denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if denom == 0:
        return 0.0
    return (tp * tn - fp * fn) / math.sqrt(denom)


def avrbacc(history):
    """Mean of the per-step balanced accuracies."""
    history = np.asarray(history, dtype=float)
    if history.size == 0:
        raise EmptyHistory("no balanced-accuracy values")
    return float(history.mean())


class RunningBACC:
    """Per-class hit/support counters giving BACC after every step."""

    def __init__(self, c):
        self.hits = np.zeros(c)
        self.support = np.zeros(c)

    def record(self, true_label, correct):
        t = int(true_label)
        self.support[t] += 1
        self.hits[t] += bool(correct)
        seen = self.support > 0
        return float(np.mean(self.hits[seen] / self.support[seen]))
