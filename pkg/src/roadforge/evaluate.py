"""Pixel-distance detection metrics: per-threshold AP, mAP, AP@20, AP@50, AR.

A detection is a true positive at threshold theta when its bottom center
lies strictly closer than theta pixels to an unmatched same-image ground
truth center; each ground truth is consumed by at most one detection.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import UnknownImageId

THRESHOLDS_PX = (2, 5, 10, 15, 20, 50)


@dataclass(frozen=True)
class EvalReport:
    ap_per_threshold: dict  # theta -> AP
    map: float
    ap20: float
    ap50: float
    ar: float
    counts: dict = field(default_factory=dict)  # n_gt, n_det, tp_per_threshold


def _sorted_detections(detections):
    """Descending score; ties by ascending image id then input index."""
    indexed = list(enumerate(detections))
    indexed.sort(key=lambda item: (-item[1].score, item[1].image_id, item[0]))
    return [det for _, det in indexed]


def match_at_threshold(gt_by_image, detections, theta):
    """Greedy matching at one threshold.

    gt_by_image: mapping image id -> array of (u, v) ground truth centers.
    Returns (labels, n_matched): labels[i] is True (TP) / False (FP) for
    the i-th detection in score order.
    """
    if theta <= 0:
        raise ValueError("theta must be > 0")
    remaining = {
        image_id: list(range(len(centers))) for image_id, centers in gt_by_image.items()
    }
    labels = []
    n_matched = 0
    for det in _sorted_detections(detections):
        centers = gt_by_image.get(det.image_id)
        candidates = remaining.get(det.image_id, [])
        best = None
        best_d = theta
        for idx in candidates:
            d = float(np.hypot(centers[idx][0] - det.bottom_center[0],
                               centers[idx][1] - det.bottom_center[1]))
            if d < best_d:
                best_d = d
                best = idx
        if best is not None:
            candidates.remove(best)
            labels.append(True)
            n_matched += 1
        else:
            labels.append(False)
    return labels, n_matched


def average_precision(labels, n_gt):
    """All-point interpolated AP from TP/FP labels in score order."""
    if n_gt == 0:
        return 1.0 if not labels else 0.0
    if not labels:
        return 0.0
    tp = np.cumsum([1 if l else 0 for l in labels])
    fp = np.cumsum([0 if l else 1 for l in labels])
    precision = tp / (tp + fp)
    # monotone smoothing from the right (interpolated PR curve)
    for i in range(len(precision) - 2, -1, -1):
        precision[i] = max(precision[i], precision[i + 1])
    ap = sum(precision[i] for i, l in enumerate(labels) if l) / n_gt
    return float(ap)


def evaluate(manifest, detections) -> EvalReport:
    """Score a detection set against a dataset manifest."""
    image_ids = {im.id for im in manifest.images}
    for det in detections:
        if det.image_id not in image_ids:
            raise UnknownImageId(det.image_id)
    gt_by_image = {
        image_id: [a.bottom_center for a in anns]
        for image_id, anns in manifest.annotations.items()
    }
    for image_id in image_ids:
        gt_by_image.setdefault(image_id, [])
    n_gt = sum(len(v) for v in gt_by_image.values())

    ap_per_threshold = {}
    recalls = []
    tp_per_threshold = {}
    for theta in THRESHOLDS_PX:
        labels, n_matched = match_at_threshold(gt_by_image, detections, theta)
        ap_per_threshold[theta] = average_precision(labels, n_gt)
        tp_per_threshold[theta] = n_matched
        recalls.append(n_matched / n_gt if n_gt > 0 else (1.0 if not detections else 0.0))
    mean_ap = float(np.mean([ap_per_threshold[t] for t in THRESHOLDS_PX]))
    return EvalReport(
        ap_per_threshold=ap_per_threshold,
        map=mean_ap,
        ap20=ap_per_threshold[20],
        ap50=ap_per_threshold[50],
        ar=float(np.mean(recalls)),
        counts={
            "n_gt": n_gt,
            "n_det": len(detections),
            "tp_per_threshold": tp_per_threshold,
        },
    )


def write_report(report: EvalReport, path, config=None):
    doc = {
        "ap_per_threshold": {str(t): report.ap_per_threshold[t] for t in THRESHOLDS_PX},
        "mAP": report.map,
        "AP@20": report.ap20,
        "AP@50": report.ap50,
        "AR": report.ar,
        "counts": report.counts,
        "config": config or {},
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")


def report_csv_row(report: EvalReport, label="") -> str:
    """One sweep-table row: label, mAP, AP@20, AP@50, AR."""
    return f"{label},{report.map:.4f},{report.ap20:.4f},{report.ap50:.4f},{report.ar:.4f}"
