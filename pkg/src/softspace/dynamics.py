"""Rolling-window portfolio concentration (HHI) and stability (Jaccard).

For each division and 5-year window we take the set of tools with RCA above
1 (computed from that window's papers only), roll the set up to communities,
and report the Herfindahl-Hirschman index of the community shares plus the
Jaccard similarity between consecutive windows' tool sets.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .community import CommunityAssignment
from .corpus import (ConfigError, DisciplineTaxonomy, MentionRecord,
                     build_count_matrix)
from .specialization import SpecializationSet, rca, specialize


@dataclass(frozen=True)
class RollingWindow:
    start_year: int
    end_year: int

    def __post_init__(self) -> None:
        if self.end_year < self.start_year:
            raise ConfigError("window end before start")

    @property
    def length(self) -> int:
        return self.end_year - self.start_year + 1

    def contains(self, year: int) -> bool:
        return self.start_year <= year <= self.end_year


def rolling_windows(year_range: tuple[int, int], length: int = 5,
                    step: int = 1) -> list[RollingWindow]:
    """All length-year windows advancing by `step` inside the study range."""
    if length < 1 or step < 1:
        raise ConfigError("window length and step must be >= 1")
    lo, hi = year_range
    return [RollingWindow(y, y + length - 1)
            for y in range(lo, hi - length + 2, step)]


@dataclass
class PortfolioSeries:
    division: str
    windows: list[RollingWindow]
    hhi: list[Optional[float]]                 # aligned with windows
    jaccard: list[Optional[float]]             # length = len(windows) - 1
    specialized_sets: list[set[str]]
    n_unassigned: list[int]                    # specialized tools missing a community


def windowed_specialization(records: Sequence[MentionRecord], w: RollingWindow,
                            taxonomy: DisciplineTaxonomy,
                            entities: Optional[set[str]] = None,
                            level: str = "division") -> SpecializationSet:
    """Specialization sets from only the papers inside the window.

    All RCA marginals come from the window's own counts, so consecutive
    windows are genuinely independent observations.
    """
    in_window = [r for r in records if w.contains(r.year)]
    if entities is not None:
        in_window = [r for r in in_window if r.raw_name in entities]
    if not in_window:
        return SpecializationSet(threshold=1.0, comparison="strict", members={})
    m = build_count_matrix(in_window, taxonomy, level=level,
                           year_range=(w.start_year, w.end_year))
    if m.total() == 0:
        return SpecializationSet(threshold=1.0, comparison="strict", members={})
    return specialize(rca(m), threshold=1.0, comparison="strict")


def hhi(spec: SpecializationSet, assignment: CommunityAssignment,
        division: str) -> Optional[float]:
    """Sum of squared community shares of the division's specialized tools.

    Returns None (missing, not zero) when the division has no specialized
    tool with a community assignment.
    """
    tools = spec.members.get(division, set())
    counts = Counter(assignment.labels[t] for t in tools if t in assignment.labels)
    total = sum(counts.values())
    if total == 0:
        return None
    return float(sum((n / total) ** 2 for n in counts.values()))


def jaccard_stability(s_t: set, s_next: set) -> Optional[float]:
    """Intersection over union; None when both sets are empty."""
    union = s_t | s_next
    if not union:
        return None
    return len(s_t & s_next) / len(union)


def portfolio_series(records: Sequence[MentionRecord],
                     assignment: CommunityAssignment,
                     taxonomy: DisciplineTaxonomy,
                     entities: Optional[set[str]] = None,
                     year_range: tuple[int, int] = (2004, 2021),
                     length: int = 5, step: int = 1,
                     level: str = "division") -> dict[str, PortfolioSeries]:
    """Per-division HHI and Jaccard trajectories over rolling windows.

    The community assignment is fixed across windows (fit once on the
    full-period network).
    """
    windows = rolling_windows(year_range, length, step)
    specs = [windowed_specialization(records, w, taxonomy, entities, level)
             for w in windows]
    divisions = sorted({d for s in specs for d in s.members})
    out: dict[str, PortfolioSeries] = {}
    for d in divisions:
        sets = [s.members.get(d, set()) for s in specs]
        hhis = [hhi(s, assignment, d) for s in specs]
        jac = [jaccard_stability(a, b) for a, b in zip(sets, sets[1:])]
        unassigned = [sum(1 for t in st if t not in assignment.labels) for st in sets]
        out[d] = PortfolioSeries(division=d, windows=windows, hhi=hhis,
                                 jaccard=jac, specialized_sets=sets,
                                 n_unassigned=unassigned)
    return out


def category_aggregate(series: dict[str, PortfolioSeries],
                       taxonomy: DisciplineTaxonomy) -> list[dict]:
    """Median/IQR of HHI and mean Jaccard per category per window.

    Quartiles use the linear-interpolation order-statistic convention.
    Missing division values are excluded; the row records how many were
    missing. A category with no reporting division in a window yields no row.
    """
    if not series:
        return []
    windows = next(iter(series.values())).windows
    categories = sorted(set(taxonomy.categories.values()))
    rows: list[dict] = []
    for wi, w in enumerate(windows):
        for cat in categories:
            divs = [d for d in series
                    if taxonomy.categories.get(d) == cat]
            if not divs:
                continue
            h_vals = [series[d].hhi[wi] for d in divs]
            h = [v for v in h_vals if v is not None]
            if h:
                arr = np.array(h)
                rows.append({"category": cat, "window_start": w.start_year,
                             "window_end": w.end_year, "stat": "hhi_median",
                             "value": float(np.percentile(arr, 50)),
                             "n_missing": len(h_vals) - len(h)})
                rows.append({"category": cat, "window_start": w.start_year,
                             "window_end": w.end_year, "stat": "hhi_iqr",
                             "value": float(np.percentile(arr, 75) - np.percentile(arr, 25)),
                             "n_missing": len(h_vals) - len(h)})
            if wi > 0:
                j_vals = [series[d].jaccard[wi - 1] for d in divs]
                j = [v for v in j_vals if v is not None]
                if j:
                    rows.append({"category": cat, "window_start": w.start_year,
                                 "window_end": w.end_year, "stat": "jaccard_mean",
                                 "value": float(np.mean(j)),
                                 "n_missing": len(j_vals) - len(j)})
    return rows


# ---------------------------------------------------------------------------
# IO


def write_portfolio(series: dict[str, PortfolioSeries], fh, delimiter: str = ",") -> None:
    w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
    w.writerow(["division", "window_start", "window_end", "hhi", "jaccard",
                "n_specialized", "n_unassigned"])
    for d in sorted(series):
        s = series[d]
        for wi, win in enumerate(s.windows):
            h = s.hhi[wi]
            j = s.jaccard[wi - 1] if wi > 0 else None
            w.writerow([d, win.start_year, win.end_year,
                        "" if h is None else f"{h:.12g}",
                        "" if j is None else f"{j:.12g}",
                        len(s.specialized_sets[wi]), s.n_unassigned[wi]])


def write_category_aggregates(rows: list[dict], fh, delimiter: str = ",") -> None:
    w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
    w.writerow(["category", "window_start", "window_end", "stat", "value", "n_missing"])
    for r in rows:
        w.writerow([r["category"], r["window_start"], r["window_end"], r["stat"],
                    f"{r['value']:.12g}", r["n_missing"]])
