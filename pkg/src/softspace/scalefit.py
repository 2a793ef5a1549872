"""Discrete power-law fitting of the mention-count distribution.

The tail model is p(x) = x^(-alpha) / zeta(alpha, x_min) for integer
x >= x_min. alpha is fit by maximizing the zeta-normalized log-likelihood;
x_min, when not given, is chosen to minimize the Kolmogorov-Smirnov distance
between the empirical tail CDF and the fitted one (Clauset-style scan over
observed values).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import zeta

from .corpus import ConfigError, DataError

ALPHA_LO = 1.0 + 1e-9
ALPHA_HI = 6.0


class FitError(DataError):
    """The tail is degenerate or otherwise unfittable."""


@dataclass
class PowerLawFit:
    alpha: float
    x_min: int
    n_tail: int
    ks_distance: float

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "x_min": self.x_min,
                "n_tail": self.n_tail, "ks_distance": self.ks_distance}


def _log_likelihood(alpha: float, tail: np.ndarray, x_min: int) -> float:
    return -len(tail) * np.log(zeta(alpha, x_min)) - alpha * np.log(tail).sum()


def _fit_alpha(tail: np.ndarray, x_min: int) -> float:
    n = len(tail)
    sum_log = float(np.log(tail).sum())
    res = minimize_scalar(lambda a: n * np.log(zeta(a, x_min)) + a * sum_log,
                          bounds=(ALPHA_LO, ALPHA_HI), method="bounded",
                          options={"xatol": 1e-6})
    return float(res.x)


def ks_distance(tail: np.ndarray, alpha: float, x_min: int) -> float:
    """Sup-distance between empirical and fitted tail CDFs at observed values."""
    xs = np.unique(tail)
    n = len(tail)
    emp_cdf = np.searchsorted(np.sort(tail), xs, side="right") / n
    # fitted CDF at x: 1 - zeta(alpha, x+1)/zeta(alpha, x_min)
    z0 = zeta(alpha, x_min)
    fit_cdf = 1.0 - zeta(alpha, xs + 1) / z0
    # check both at and just below each observed value (empirical CDF jumps)
    emp_before = np.concatenate([[0.0], emp_cdf[:-1]])
    fit_before = 1.0 - zeta(alpha, xs) / z0
    d = np.maximum(np.abs(emp_cdf - fit_cdf), np.abs(emp_before - fit_before))
    return float(d.max())


def fit_power_law(totals: Sequence[int], x_min: Optional[int] = None) -> PowerLawFit:
    """MLE fit of the discrete power-law tail.

    With `x_min` given, only alpha is estimated. Otherwise every observed
    value is tried as a candidate cutoff and the KS-minimizing one wins.
    """
    data = np.asarray(list(totals), dtype=np.int64)
    if (data < 1).any():
        raise DataError("totals must be positive integers")
    if x_min is not None:
        if x_min < 1:
            raise ConfigError("x_min must be >= 1")
        return _fit_at(data, int(x_min))
    candidates = np.unique(data)
    # need at least 2 tail points and a non-degenerate tail
    best: Optional[PowerLawFit] = None
    for xm in candidates:
        tail = data[data >= xm]
        if len(tail) < 2 or len(np.unique(tail)) < 2:
            continue
        fit = _fit_at(data, int(xm))
        if best is None or fit.ks_distance < best.ks_distance:
            best = fit
    if best is None:
        raise FitError("no candidate x_min leaves a fittable tail")
    return best


def _fit_at(data: np.ndarray, x_min: int) -> PowerLawFit:
    tail = data[data >= x_min]
    if len(tail) < 2:
        raise DataError(f"fewer than 2 observations >= x_min={x_min}")
    if len(np.unique(tail)) < 2:
        raise FitError("degenerate all-equal tail")
    alpha = _fit_alpha(tail, x_min)
    return PowerLawFit(alpha=alpha, x_min=x_min, n_tail=len(tail),
                       ks_distance=ks_distance(tail, alpha, x_min))


def log_likelihood(fit: PowerLawFit, totals: Sequence[int]) -> float:
    """Tail log-likelihood at the fitted parameters (for audits)."""
    data = np.asarray(list(totals), dtype=np.int64)
    tail = data[data >= fit.x_min]
    return float(_log_likelihood(fit.alpha, tail, fit.x_min))


def ccdf_points(totals: Sequence[int]) -> list[tuple[int, float]]:
    """Empirical complementary CDF at each observed value, for log-log plots."""
    data = np.sort(np.asarray(list(totals), dtype=np.int64))
    n = len(data)
    xs = np.unique(data)
    below = np.searchsorted(data, xs, side="left")
    return [(int(x), float((n - b) / n)) for x, b in zip(xs, below)]


def write_fit(fit: PowerLawFit, fh) -> None:
    json.dump(fit.to_dict(), fh, indent=2, sort_keys=True)
    fh.write("\n")


def write_ccdf(points: list[tuple[int, float]], fh, delimiter: str = ",") -> None:
    w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
    w.writerow(["mentions", "ccdf"])
    for x, p in points:
        w.writerow([x, f"{p:.12g}"])
