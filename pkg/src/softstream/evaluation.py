"""Precision scoring with discovered-class alignment, confident-precision,
and probe time-series assembly.

Discovered class ids are arbitrary integers, so scoring first aligns them to
ground-truth ids by greedy majority matching over the co-occurrence counts.
All computations here are pure and post-hoc.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .core import OUTLIER


@dataclass
class LabelAlignment:
    """Injective partial mapping from predicted class ids to truth ids."""

    mapping: dict[int, int] = field(default_factory=dict)

    def apply(self, label: int) -> int:
        """Translate one predicted label; unmapped ids pass through as-is."""
        return self.mapping.get(label, label)


def align_labels(pred, truth) -> LabelAlignment:
    """Greedy majority matching: repeatedly pair the (pred, truth) classes
    with the largest co-occurrence among the still-unmatched ones.

    Ties break on the smaller predicted id, then the smaller truth id.
    OUTLIER predictions never participate.
    """
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError("pred and truth must have equal length")
    counts = Counter(
        (int(p), int(t)) for p, t in zip(pred, truth) if int(p) != OUTLIER
    )
    mapping: dict[int, int] = {}
    used_truth: set[int] = set()
    for (p, t), _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0][0], kv[0][1])):
        if p in mapping or t in used_truth:
            continue
        mapping[p] = t
        used_truth.add(t)
    return LabelAlignment(mapping=mapping)


def _correct_mask(pred: np.ndarray, truth: np.ndarray, alignment: LabelAlignment) -> np.ndarray:
    instantiated = set(alignment.mapping.values())
    out = np.zeros(len(pred), dtype=bool)
    for i, (p, t) in enumerate(zip(pred, truth)):
        p, t = int(p), int(t)
        if p == OUTLIER:
            # an outlier call is only wrong if the point's class was
            # actually instantiated in the model
            out[i] = t not in instantiated
        else:
            # unmapped predicted classes always count wrong
            out[i] = p in alignment.mapping and alignment.mapping[p] == t
    return out


def precision(pred, truth, alignment: LabelAlignment | None = None) -> float:
    """Fraction of points whose aligned prediction matches the ground truth.

    Computed over the full stream after retroactive relabeling and
    hardening. OUTLIER predictions count as mismatches unless the point's
    truth class was never instantiated.
    """
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError("pred and truth must have equal length")
    if pred.size < 1:
        raise ValueError("need at least one label")
    if alignment is None:
        alignment = align_labels(pred, truth)
    return float(_correct_mask(pred, truth, alignment).mean())


def confident_precision(
    pred,
    truth,
    max_typ,
    alignment: LabelAlignment | None = None,
    threshold: float = 0.2,
) -> tuple[float, float]:
    """Precision restricted to points with max typicality above threshold.

    Returns (precision, coverage). When no point qualifies the convention is
    (1.0, 0.0): there are no confident predictions to be wrong about.
    """
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    typ = np.asarray(max_typ, dtype=np.float64)
    if not (pred.shape == truth.shape == typ.shape):
        raise ValueError("pred, truth and max_typ must have equal length")
    if alignment is None:
        alignment = align_labels(pred, truth)
    mask = typ > threshold
    if not mask.any():
        return 1.0, 0.0
    correct = _correct_mask(pred, truth, alignment)
    return float(correct[mask].mean()), float(mask.mean())


def probe_series(history) -> np.ndarray:
    """Dense (stream index x probe) table of max typicalities."""
    if history is None or len(history) == 0:
        return np.zeros((0, 0))
    return np.asarray(history, dtype=np.float64)


def summarize_run(pred, truth, max_typ, n_initial_classes: int,
                  confident_threshold: float = 0.2) -> dict:
    """Metrics document for one run: precision, confident precision with
    coverage, and the number of discovered classes."""
    alignment = align_labels(pred, truth)
    prec = precision(pred, truth, alignment)
    conf, cov = confident_precision(pred, truth, max_typ, alignment, confident_threshold)
    discovered = sorted(set(int(p) for p in np.asarray(pred)) - set(range(n_initial_classes)) - {OUTLIER})
    return {
        "precision": prec,
        "confident_precision": conf,
        "coverage": cov,
        "confident_threshold": confident_threshold,
        "n_classes_discovered": len(discovered),
        "discovered_class_ids": discovered,
        "alignment": {str(k): int(v) for k, v in alignment.mapping.items()},
    }
