"""Recall-only evaluation for partially labeled ground truth.

Each ground-truth bubble is paired with the prediction of largest IoU;
instance-level recall counts pairs above each IoU threshold, pixel-level
recall counts recovered ground-truth pixels. Precision and mAP are
deliberately absent: with partial labels an unmatched prediction is not
evidence of a false positive.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .core import EmptyGroundTruth, GeometryMismatch, Instance, as_mask, check_same_shape

IOU_THRESHOLDS = (0.5, 0.6, 0.7, 0.8, 0.9)


def iou(a: Instance, b: Instance) -> float:
    if (a.width, a.height) != (b.width, b.height):
        raise GeometryMismatch(
            f"instance geometries differ: {a.width}x{a.height} vs {b.width}x{b.height}")
    ma, mb = a.to_mask(), b.to_mask()
    inter = int((ma & mb).sum())
    if inter == 0:
        return 0.0
    return inter / int((ma | mb).sum())


def pair_instances(pred: list[Instance], gt: list[Instance],
                   one_to_one: bool = False) -> list[tuple[int, int, float]]:
    """Pair each ground truth with its largest-IoU prediction.

    Default is many-to-one: one prediction may serve several ground truths
    (a merged prediction covering two labeled bubbles matches both). With
    ``one_to_one`` a globally optimal unique assignment is used instead.
    """
    if not pred or not gt:
        return []
    _check_shared_geometry(pred + gt)
    pred_masks = [p.to_mask() for p in pred]
    ious = np.zeros((len(gt), len(pred)))
    for i, g in enumerate(gt):
        gm = g.to_mask()
        g_area = int(gm.sum())
        for j, pm in enumerate(pred_masks):
            inter = int((gm & pm).sum())
            if inter:
                ious[i, j] = inter / (g_area + int(pm.sum()) - inter)
    pairs: list[tuple[int, int, float]] = []
    if one_to_one:
        from scipy.optimize import linear_sum_assignment

        rows, cols = linear_sum_assignment(-ious)
        for i, j in zip(rows, cols):
            if ious[i, j] > 0:
                pairs.append((gt[i].id, pred[j].id, float(ious[i, j])))
    else:
        order = np.argsort([p.id for p in pred], kind="stable")
        for i, g in enumerate(gt):
            best_j, best = -1, 0.0
            for j in order:  # ascending pred id, so ties keep the lower id
                if ious[i, j] > best:
                    best, best_j = float(ious[i, j]), int(j)
            if best_j >= 0:
                pairs.append((g.id, pred[best_j].id, best))
    return pairs


def _check_shared_geometry(instances: list[Instance]) -> None:
    geoms = {(i.width, i.height) for i in instances}
    if len(geoms) > 1:
        raise GeometryMismatch(f"mixed instance geometries: {sorted(geoms)}")


def matched_counts(pairs, thresholds=IOU_THRESHOLDS) -> list[int]:
    """Number of ground truths matched at IoU >= t, per threshold."""
    return [sum(1 for _, _, v in pairs if v >= t) for t in thresholds]


def instance_recall(pairs, gt_count: int, thresholds=IOU_THRESHOLDS) -> list[float]:
    if gt_count <= 0:
        raise EmptyGroundTruth("no ground-truth instances")
    return [c / gt_count for c in matched_counts(pairs, thresholds)]


def pixel_recall(pred_union, gt_union) -> float:
    p = as_mask(pred_union)
    g = as_mask(gt_union)
    check_same_shape(p, g)
    total = int(g.sum())
    if total == 0:
        raise EmptyGroundTruth("no ground-truth pixels")
    return int((p & g).sum()) / total


@dataclass
class ImageRow:
    image_id: str
    matched: list[int]            # matched GT count per IoU threshold
    gt_count: int
    true_positive_pixels: int
    total_positive_pixels: int


@dataclass
class EvalReport:
    thresholds: tuple[float, ...] = IOU_THRESHOLDS
    per_image: list[ImageRow] = field(default_factory=list)

    @property
    def total_matched(self) -> list[int]:
        return [sum(r.matched[k] for r in self.per_image)
                for k in range(len(self.thresholds))]

    @property
    def total_gt(self) -> int:
        return sum(r.gt_count for r in self.per_image)

    def instance_recalls(self) -> list[float]:
        # pooled over counts, not averaged over per-image recalls
        if self.total_gt == 0:
            raise EmptyGroundTruth("no ground-truth instances")
        return [m / self.total_gt for m in self.total_matched]

    def pixel_recall_total(self) -> float:
        tp = sum(r.true_positive_pixels for r in self.per_image)
        tot = sum(r.total_positive_pixels for r in self.per_image)
        if tot == 0:
            raise EmptyGroundTruth("no ground-truth pixels")
        return tp / tot


def build_report(dataset) -> EvalReport:
    """Assemble per-image rows plus pooled totals.

    `dataset` is a list of (AnnotationSet gt, list[Instance] pred) pairs.
    """
    report = EvalReport()
    for gt_set, pred in dataset:
        pairs = pair_instances(pred, gt_set.instances)
        gt_union = gt_set.union_mask()
        pred_union = np.zeros((gt_set.height, gt_set.width), dtype=bool)
        for inst in pred:
            if (inst.width, inst.height) != (gt_set.width, gt_set.height):
                raise GeometryMismatch(
                    f"prediction geometry mismatch on image {gt_set.image_id}")
            pred_union |= inst.to_mask()
        report.per_image.append(ImageRow(
            image_id=gt_set.image_id,
            matched=matched_counts(pairs, report.thresholds),
            gt_count=len(gt_set.instances),
            true_positive_pixels=int((pred_union & gt_union).sum()),
            total_positive_pixels=int(gt_union.sum()),
        ))
    return report


# ---------------------------------------------------------------------------
# Rendering


def report_to_csv(report: EvalReport) -> str:
    """Machine-readable report; recalls at full precision."""
    cols = [f"ge_{t}" for t in report.thresholds]
    rcols = [f"recall_{t}" for t in report.thresholds]
    out = io.StringIO()
    out.write("image," + ",".join(cols) + ",gt,tp_pixels,total_pixels,"
              + ",".join(rcols) + ",pixel_recall\n")

    def write_row(name, matched, gt, tp, tot):
        recalls = [m / gt if gt else 0.0 for m in matched]
        px = tp / tot if tot else 0.0
        out.write(f"{name}," + ",".join(str(m) for m in matched)
                  + f",{gt},{tp},{tot},"
                  + ",".join(repr(r) for r in recalls) + f",{px!r}\n")

    for row in report.per_image:
        write_row(row.image_id, row.matched, row.gt_count,
                  row.true_positive_pixels, row.total_positive_pixels)
    write_row("Total", report.total_matched, report.total_gt,
              sum(r.true_positive_pixels for r in report.per_image),
              sum(r.total_positive_pixels for r in report.per_image))
    return out.getvalue()


def report_to_table(report: EvalReport) -> str:
    """Aligned-text tables: instance-level counts/recalls, then pixel recall.

    Recalls are rounded to 2 decimals, like the published tables.
    """
    ths = report.thresholds
    header = (["Img"] + [f">={t}" for t in ths] + ["GT"]
              + [f"R_I({t})" for t in ths])
    rows = []
    for row in report.per_image:
        recalls = [f"{m / row.gt_count:.2f}" if row.gt_count else "-"
                   for m in row.matched]
        rows.append([row.image_id] + [str(m) for m in row.matched]
                    + [str(row.gt_count)] + recalls)
    total_recalls = [f"{m / report.total_gt:.2f}" for m in report.total_matched]
    rows.append(["Total"] + [str(m) for m in report.total_matched]
                + [str(report.total_gt)] + total_recalls)
    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(header)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(header, widths))]
    for r in rows:
        lines.append("  ".join(c.rjust(w) for c, w in zip(r, widths)))

    lines.append("")
    lines.append("Img        TP-pixels  Total-pixels  R_P")
    for row in report.per_image:
        px = row.true_positive_pixels / row.total_positive_pixels \
            if row.total_positive_pixels else 0.0
        lines.append(f"{row.image_id:<10} {row.true_positive_pixels:>9}  "
                     f"{row.total_positive_pixels:>12}  {px:.2f}")
    tp = sum(r.true_positive_pixels for r in report.per_image)
    tot = sum(r.total_positive_pixels for r in report.per_image)
    lines.append(f"{'Total':<10} {tp:>9}  {tot:>12}  {tp / tot if tot else 0.0:.2f}")
    return "\n".join(lines) + "\n"


def plot_recall_curve(report: EvalReport, path) -> None:
    """Recall vs IoU threshold figure written next to the delimited output."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(report.thresholds, report.instance_recalls(), "o-", label="instance recall")
    ax.axhline(report.pixel_recall_total(), ls="--", color="gray", label="pixel recall")
    ax.set_xlabel("IoU threshold")
    ax.set_ylabel("recall")
    ax.set_ylim(0, 1.05)
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
