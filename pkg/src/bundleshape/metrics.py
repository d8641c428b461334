"""Evaluation metrics and the statistical transforms used for reporting:
Pearson's r, variance-normalized MSE, Fisher's r-to-z, and the paired
t-test (p-value via the regularized incomplete beta function).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .shapes import MEASURE_NAMES

__all__ = [
    "ZeroVariance",
    "ZeroVarianceDiffs",
    "OutOfRange",
    "EvalReport",
    "pearson_r",
    "nmse",
    "fisher_z",
    "paired_t",
    "betainc_regularized",
    "evaluate",
    "write_report",
]


class ZeroVariance(ValueError):
    pass


class ZeroVarianceDiffs(ValueError):
    pass


class OutOfRange(ValueError):
    pass


def pearson_r(x, y) -> float:
    """Sample Pearson correlation of two equal-length vectors."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.shape[0] < 2:
        raise ValueError("need two equal-length 1-d vectors with n >= 2")
    dx = x - x.mean()
    dy = y - y.mean()
    denom = np.sqrt((dx * dx).sum() * (dy * dy).sum())
    if denom <= 0:
        raise ZeroVariance("an input vector has zero variance")
    return float((dx * dy).sum() / denom)


def nmse(pred, gt) -> float:
    """Mean squared error normalized by ground-truth population variance.

    Near 0 means a close match; a predictor worse than the ground-truth
    mean can exceed 1.
    """
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape or pred.ndim != 1 or pred.shape[0] < 2:
        raise ValueError("need two equal-length 1-d vectors with n >= 2")
    var = gt.var()
    if var <= 0:
        raise ZeroVariance("ground truth has zero variance")
    return float(np.mean((pred - gt) ** 2) / var)


def fisher_z(r: float) -> float:
    """Fisher r-to-z transform: atanh(r)."""
    if not abs(r) < 1:
        raise OutOfRange(f"|r| must be < 1, got {r}")
    return math.atanh(r)


def betainc_regularized(a: float, b: float, x: float, tol: float = 1e-10) -> float:
    """Regularized incomplete beta I_x(a, b) via Lentz continued fraction."""
    if not 0.0 <= x <= 1.0:
        raise OutOfRange(f"x must be in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1) / (a + b + 2):
        return front * _betacf(a, b, x, tol) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x, tol) / b


def _betacf(a: float, b: float, x: float, tol: float) -> float:
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 500):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < tol:
            return h
    raise RuntimeError("continued fraction for incomplete beta did not converge")


def paired_t(a, b) -> tuple[float, int, float]:
    """Paired t-test; returns (t, dof, two-sided p)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.shape[0] < 2:
        raise ValueError("need two equal-length 1-d vectors with n >= 2")
    d = a - b
    n = d.shape[0]
    sd = d.std(ddof=1)
    if sd <= 0:
        raise ZeroVarianceDiffs("differences have zero variance")
    t = float(d.mean() / (sd / math.sqrt(n)))
    dof = n - 1
    p = betainc_regularized(dof / 2.0, 0.5, dof / (dof + t * t))
    return t, dof, p


@dataclass(frozen=True)
class EvalReport:
    """Per-measure Pearson r and nMSE over a test set, plus summaries."""

    variant: str
    n_bundles: int
    pearson: np.ndarray  # (10,)
    nmse: np.ndarray  # (10,)

    @property
    def mean_pearson(self) -> float:
        return float(self.pearson.mean())

    @property
    def sd_pearson(self) -> float:
        return float(self.pearson.std(ddof=1))

    @property
    def mean_nmse(self) -> float:
        return float(self.nmse.mean())

    @property
    def sd_nmse(self) -> float:
        return float(self.nmse.std(ddof=1))


def evaluate(predictions, ground_truth, variant: str = "full") -> EvalReport:
    """Per-measure metrics for (n, 10) prediction/ground-truth matrices."""
    pred = np.asarray(predictions, dtype=np.float64)
    gt = np.asarray(ground_truth, dtype=np.float64)
    if pred.shape != gt.shape or pred.ndim != 2 or pred.shape[1] != len(MEASURE_NAMES):
        raise ValueError(f"expected matching (n, {len(MEASURE_NAMES)}) matrices")
    rs = np.array([pearson_r(pred[:, j], gt[:, j]) for j in range(pred.shape[1])])
    errs = np.array([nmse(pred[:, j], gt[:, j]) for j in range(pred.shape[1])])
    return EvalReport(variant=variant, n_bundles=pred.shape[0], pearson=rs, nmse=errs)


def write_report(report: EvalReport, path, header_comment: str | None = None) -> None:
    """CSV: one row per measure plus a trailing average row with mean±sd."""
    with open(path, "w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh)
        writer.writerow(["measure", "pearson_r", "nmse"])
        for name, r, e in zip(MEASURE_NAMES, report.pearson, report.nmse):
            writer.writerow([name, f"{r:.6f}", f"{e:.6f}"])
        writer.writerow(
            [
                "average",
                f"{report.mean_pearson:.6f}±{report.sd_pearson:.6f}",
                f"{report.mean_nmse:.6f}±{report.sd_nmse:.6f}",
            ]
        )
