"""Region benchmark measures: segmentation covering, PRI and VoI.

All three are computed from the joint label contingency table.
"""

import json
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from spsg.io import read_label_file

METRICS = ("cov", "pri", "voi")
HIGHER_IS_BETTER = {"cov": True, "pri": True, "voi": False}


def contingency(a, b):
    """Joint count table of two label maps (rows: labels of ``a``)."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"label maps differ in shape: {a.shape} vs {b.shape}")
    _, ia = np.unique(a.ravel(), return_inverse=True)
    _, ib = np.unique(b.ravel(), return_inverse=True)
    ia, ib = ia.ravel(), ib.ravel()
    table = np.zeros((ia.max() + 1, ib.max() + 1), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)
    return table


def covering(pred, gt):
    """Covering of ``gt`` by ``pred``: size-weighted best IoU of each gt region.

    Best overlaps and their weighted sum are accumulated as exact fractions
    over the nonzero cells of the contingency table, so the result is the
    correctly rounded value of the exact covering.
    """
    table = contingency(gt, pred)
    size_gt = table.sum(axis=1)
    size_pred = table.sum(axis=0)
    r, c = np.nonzero(table)
    inter = table[r, c]
    union = size_gt[r] + size_pred[c] - inter
    best = [Fraction(0)] * table.shape[0]
    for k in range(r.size):
        iou = Fraction(int(inter[k]), int(union[k]))
        if iou > best[r[k]]:
            best[r[k]] = iou
    total = sum(int(size_gt[q]) * best[q] for q in range(table.shape[0]))
    return float(total / int(table.sum()))


def _pairs(x):
    x = np.asarray(x, dtype=np.int64)
    return int(np.sum(x * (x - 1) // 2))


def pri(pred, gt):
    """Rand index: fraction of pixel pairs on which both maps agree."""
    table = contingency(pred, gt)
    N = int(table.sum())
    total = N * (N - 1) // 2
    if total == 0:
        return 1.0
    both = _pairs(table)
    same_a = _pairs(table.sum(axis=1))
    same_b = _pairs(table.sum(axis=0))
    agree = total - same_a - same_b + 2 * both
    return agree / total


def voi(pred, gt):
    """Variation of information ``H(pred | gt) + H(gt | pred)`` in nats.

    Summed over the nonzero cells of the contingency table, so identical
    partitions give exactly zero.
    """
    table = contingency(pred, gt)
    N = float(table.sum())
    size_a = table.sum(axis=1)
    size_b = table.sum(axis=0)
    r, c = np.nonzero(table)
    t = table[r, c].astype(np.float64)
    h = -np.sum(t / N * (np.log(t / size_b[c]) + np.log(t / size_a[r])))
    return float(h) if h > 0 else 0.0


def score(pred, gts):
    """Metrics of one prediction averaged over several ground truths."""
    if not gts:
        raise ValueError("need at least one ground truth")
    vals = {m: [] for m in METRICS}
    for gt in gts:
        vals["cov"].append(covering(pred, gt))
        vals["pri"].append(pri(pred, gt))
        vals["voi"].append(voi(pred, gt))
    return {m: float(np.mean(v)) for m, v in vals.items()}


@dataclass
class MetricsReport:
    """Per-image metric curves over a shared alpha grid, with aggregates."""

    alphas: list
    images: dict = field(default_factory=dict)  # name -> {metric: [value per alpha]}
    per_gt: dict = field(default_factory=dict)  # name -> [[{metric: value} per gt] per alpha]
    skipped: list = field(default_factory=list)

    def aggregates(self):
        tables = {m: {name: vals[m] for name, vals in self.images.items()} for m in METRICS}
        return {m: ods_ois(tables[m], self.alphas, HIGHER_IS_BETTER[m]) for m in METRICS}

    def to_dict(self):
        return {
            "alphas": list(self.alphas),
            "images": self.images,
            "per_gt": self.per_gt,
            "skipped": list(self.skipped),
            "skipped_count": len(self.skipped),
            "aggregates": self.aggregates() if self.images else {},
        }


def ods_ois(table, alphas=None, higher_is_better=True):
    """Optimal dataset scale and optimal image scale.

    ``table`` maps image name to a sequence of scores, one per alpha of a
    grid shared by all images.
    """
    if not table:
        raise ValueError("no images to aggregate")
    rows = [np.asarray(v, dtype=np.float64) for v in table.values()]
    if len({r.shape for r in rows}) != 1:
        raise ValueError("images were evaluated on different alpha grids")
    scores = np.vstack(rows)
    if alphas is not None and len(alphas) != scores.shape[1]:
        raise ValueError("alpha grid length does not match scores")
    pick = np.argmax if higher_is_better else np.argmin
    best = np.max if higher_is_better else np.min
    means = scores.mean(axis=0)
    k = int(pick(means))
    out = {"ods": float(means[k]), "ois": float(np.mean(best(scores, axis=1)))}
    out["ods_alpha"] = float(alphas[k]) if alphas is not None else k
    return out


def format_table(aggregates):
    """Cov / PRI / VoI at ODS and OIS as a plain-text table."""
    head = f"{'':8s}{'Cov':>14s}{'PRI':>14s}{'VoI':>14s}"
    sub = f"{'':8s}" + "".join(f"{'ODS':>7s}{'OIS':>7s}" for _ in METRICS)
    body = f"{'spsg':8s}" + "".join(
        f"{aggregates[m]['ods']:7.2f}{aggregates[m]['ois']:7.2f}" for m in METRICS)
    return "\n".join([head, sub, body])


def _load_predictions(image_dir):
    """``(alphas, label maps)`` of one image's segment output directory."""
    index = image_dir / "index.json"
    if index.exists():
        entries = json.loads(index.read_text(encoding="utf-8"))["entries"]
        entries = sorted(entries, key=lambda e: e["alpha"])
        return ([float(e["alpha"]) for e in entries],
                [read_label_file(image_dir / e["file"]) for e in entries])
    # without an index, label maps in name order form the grid
    files = sorted(p for p in image_dir.iterdir() if p.suffix.lower() in (".png", ".csv"))
    return [float(k) for k in range(len(files))], [read_label_file(p) for p in files]


def evaluate_dirs(pred_dir, gt_dir):
    """Score every image of a prediction directory against its ground truths.

    ``pred_dir/<image>/`` holds one image's sweep (``index.json`` plus label
    PNGs, or just label maps); ``gt_dir/<image>/`` holds its ground-truth
    label maps. Images without ground truth are skipped with a warning.
    """
    pred_dir, gt_dir = Path(pred_dir), Path(gt_dir)
    if not pred_dir.is_dir():
        raise FileNotFoundError(f"{pred_dir}: not a directory")
    images = sorted(p for p in pred_dir.iterdir() if p.is_dir())
    if not images:
        raise ValueError(f"{pred_dir}: no prediction subdirectories")
    report = None
    skipped = []
    for image_dir in images:
        name = image_dir.name
        gt_files = sorted(p for p in (gt_dir / name).glob("*")
                          if p.suffix.lower() in (".png", ".csv")) if (gt_dir / name).is_dir() else []
        if not gt_files:
            warnings.warn(f"no ground truth for {name}; skipped", stacklevel=2)
            skipped.append(name)
            continue
        alphas, preds = _load_predictions(image_dir)
        if not preds:
            raise ValueError(f"{image_dir}: no label maps")
        if report is None:
            report = MetricsReport(alphas)
        elif len(alphas) != len(report.alphas) or not np.allclose(alphas, report.alphas):
            raise ValueError(f"{name}: alpha grid differs from the other images")
        gts = [read_label_file(p) for p in gt_files]
        curves = {m: [] for m in METRICS}
        detail = []
        for pred in preds:
            per = [{"cov": covering(pred, gt), "pri": pri(pred, gt), "voi": voi(pred, gt)}
                   for gt in gts]
            detail.append(per)
            for m in METRICS:
                curves[m].append(float(np.mean([p[m] for p in per])))
        report.images[name] = curves
        report.per_gt[name] = detail
    if report is None:
        raise ValueError("no image had ground truth")
    report.skipped = skipped
    return report
