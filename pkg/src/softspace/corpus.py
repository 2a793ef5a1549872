"""Ingestion of raw software-mention records into a discipline x software count matrix.

The input is a delimited file (comma or tab) with one mention per line:

    paper_id, software, label, doi, year, discipline_codes

where ``discipline_codes`` is a pipe-separated list of 2-digit division or
4-digit group codes. Processing order: curation-label filtering, name
disambiguation (case-fold merge, then alias table), record filtering (year
range, DOI, discipline codes), then paper-level deduplicated counting.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

logger = logging.getLogger(__name__)

CURATION_LABELS = ("software", "not_software", "unclear", "not_curated")

# ANZSRC 2020 divisions used in the study, with their broad category.
# Categories: NH = Natural & Health, PT = Physical & Technical,
# SH = Social Sciences & Humanities.
DEFAULT_DIVISIONS = {
    "30": ("Agricultural, Veterinary and Food Sciences", "NaturalHealth"),
    "31": ("Biological Sciences", "NaturalHealth"),
    "32": ("Biomedical and Clinical Sciences", "NaturalHealth"),
    "33": ("Built Environment and Design", "SocialHumanities"),
    "34": ("Chemical Sciences", "PhysicalTechnical"),
    "35": ("Commerce, Management, Tourism and Services", "SocialHumanities"),
    "36": ("Creative Arts and Writing", "SocialHumanities"),
    "37": ("Earth Sciences", "NaturalHealth"),
    "38": ("Economics", "SocialHumanities"),
    "39": ("Education", "SocialHumanities"),
    "40": ("Engineering", "PhysicalTechnical"),
    "41": ("Environmental Sciences", "NaturalHealth"),
    "42": ("Health Sciences", "NaturalHealth"),
    "43": ("History, Heritage and Archaeology", "SocialHumanities"),
    "44": ("Human Society", "SocialHumanities"),
    "46": ("Information and Computing Sciences", "PhysicalTechnical"),
    "47": ("Language, Communication and Culture", "SocialHumanities"),
    "48": ("Law and Legal Studies", "SocialHumanities"),
    "49": ("Mathematical Sciences", "PhysicalTechnical"),
    "50": ("Philosophy and Religious Studies", "SocialHumanities"),
    "51": ("Physical Sciences", "PhysicalTechnical"),
    "52": ("Psychology", "SocialHumanities"),
}

DEFAULT_YEAR_RANGE = (2004, 2021)


class ConfigError(ValueError):
    """Invalid configuration input (alias table, taxonomy, parameters)."""


class DataError(ValueError):
    """Invalid or unusable data encountered during ingestion."""


@dataclass
class MentionRecord:
    paper_id: str
    raw_name: str
    curation_label: str
    doi: Optional[str]
    year: int
    discipline_codes: list[str]

    def validate(self) -> None:
        if not self.paper_id:
            raise DataError("record with empty paper_id")
        if self.curation_label not in CURATION_LABELS:
            raise DataError(f"unknown curation label {self.curation_label!r}")


@dataclass
class AliasTable:
    """Variant name -> canonical name mapping.

    The mapping must be idempotent: no canonical name may itself appear as a
    variant key (which also rules out chains and cycles).
    """

    entries: dict[str, str]

    def __post_init__(self) -> None:
        canonicals = set(self.entries.values())
        bad = canonicals & set(self.entries)
        if bad:
            raise ConfigError(
                "alias table not idempotent; canonical names used as variants: "
                + ", ".join(sorted(bad)[:5])
            )

    def resolve(self, name: str) -> str:
        return self.entries.get(name, name)

    @classmethod
    def empty(cls) -> "AliasTable":
        return cls(entries={})


@dataclass
class DisciplineTaxonomy:
    divisions: dict[str, str]            # 2-digit code -> label
    groups: dict[str, str]               # 4-digit code -> parent division
    categories: dict[str, str]           # division -> broad category

    def __post_init__(self) -> None:
        for g, parent in self.groups.items():
            if parent not in self.divisions:
                raise ConfigError(f"group {g} has unknown parent division {parent}")
        for d in self.divisions:
            if d not in self.categories:
                raise ConfigError(f"division {d} has no category mapping")

    def division_of(self, code: str) -> Optional[str]:
        """Map a raw discipline code to its 2-digit division, if known."""
        div = code[:2]
        return div if div in self.divisions else None

    def group_of(self, code: str) -> Optional[str]:
        return code[:4] if len(code) >= 4 else None

    @classmethod
    def default(cls) -> "DisciplineTaxonomy":
        return cls(
            divisions={c: label for c, (label, _) in DEFAULT_DIVISIONS.items()},
            groups={},
            categories={c: cat for c, (_, cat) in DEFAULT_DIVISIONS.items()},
        )


@dataclass
class CountMatrix:
    """Discipline x software paper-deduplicated mention counts."""

    rows: list[str]                      # discipline codes
    cols: list[str]                      # canonical software names
    counts: np.ndarray                   # shape (len(rows), len(cols)), int64
    year_range: tuple[int, int]

    def __post_init__(self) -> None:
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape != (len(self.rows), len(self.cols)):
            raise DataError("count matrix shape does not match labels")
        if (self.counts < 0).any():
            raise DataError("negative counts")
        if len(set(self.rows)) != len(self.rows) or len(set(self.cols)) != len(self.cols):
            raise DataError("duplicate row or column labels")

    def column_totals(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    def total(self) -> int:
        return int(self.counts.sum())


# ---------------------------------------------------------------------------
# record IO


def parse_records(stream: Iterable[str], delimiter: Optional[str] = None) -> Iterator[MentionRecord]:
    """Parse mention records from delimited text with a header row."""
    it = iter(stream)
    try:
        header_line = next(it)
    except StopIteration:
        return
    if delimiter is None:
        delimiter = "\t" if "\t" in header_line else ","
    reader = csv.reader(io.StringIO(header_line), delimiter=delimiter)
    header = next(reader)
    expected = ["paper_id", "software", "label", "doi", "year", "discipline_codes"]
    if [h.strip() for h in header] != expected:
        raise DataError(f"bad header, expected {expected}")
    for row in csv.reader(it, delimiter=delimiter):
        if not row:
            continue
        paper_id, name, label, doi, year_s, codes_s = row
        rec = MentionRecord(
            paper_id=paper_id,
            raw_name=name,
            curation_label=label,
            doi=doi or None,
            year=int(year_s),
            discipline_codes=[c for c in codes_s.split("|") if c],
        )
        rec.validate()
        yield rec


def write_records(records: Iterable[MentionRecord], fh, delimiter: str = ",") -> int:
    w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
    w.writerow(["paper_id", "software", "label", "doi", "year", "discipline_codes"])
    n = 0
    for r in records:
        w.writerow([r.paper_id, r.raw_name, r.curation_label, r.doi or "",
                    r.year, "|".join(r.discipline_codes)])
        n += 1
    return n


def load_alias_table(stream: Iterable[str], delimiter: Optional[str] = None) -> AliasTable:
    """Load a two-column (variant, canonical) delimited file. Header optional."""
    entries: dict[str, str] = {}
    rows = list(csv.reader(stream, delimiter=delimiter or ","))
    for i, row in enumerate(rows):
        if not row:
            continue
        if i == 0 and [c.strip().lower() for c in row[:2]] == ["variant", "canonical"]:
            continue
        if len(row) < 2:
            raise ConfigError(f"alias table line {i + 1}: need 2 columns")
        entries[row[0]] = row[1]
    return AliasTable(entries=entries)


def load_taxonomy(stream: Iterable[str], delimiter: Optional[str] = None) -> DisciplineTaxonomy:
    """Load a (code, label, parent_code, category) delimited file.

    Rows with an empty parent_code are divisions and must carry a category;
    rows with a parent_code are groups.
    """
    divisions: dict[str, str] = {}
    groups: dict[str, str] = {}
    categories: dict[str, str] = {}
    rows = list(csv.reader(stream, delimiter=delimiter or ","))
    for i, row in enumerate(rows):
        if not row:
            continue
        if i == 0 and row[0].strip().lower() == "code":
            continue
        if len(row) < 4:
            raise ConfigError(f"taxonomy line {i + 1}: need 4 columns")
        code, label, parent, category = (c.strip() for c in row[:4])
        if parent:
            groups[code] = parent
        else:
            divisions[code] = label
            categories[code] = category
    return DisciplineTaxonomy(divisions=divisions, groups=groups, categories=categories)


# ---------------------------------------------------------------------------
# curation and disambiguation


def known_software_names(records: Iterable[MentionRecord]) -> set[str]:
    """Canonical-name universe: every name attested under the `software` label."""
    return {r.raw_name for r in records if r.curation_label == "software"}


def curate(records: Iterable[MentionRecord], known_names: set[str]) -> Iterator[MentionRecord]:
    """Keep `software` records plus `not_curated` records whose name is known.

    `not_software` and `unclear` records are dropped.
    """
    for r in records:
        if r.curation_label == "software":
            yield r
        elif r.curation_label == "not_curated" and r.raw_name in known_names:
            yield r


def _case_merge_map(names: Counter) -> dict[str, str]:
    """Map each surface form to the most frequent form sharing its casefold.

    Ties are broken by the lexicographically smallest byte sequence, so the
    merge is deterministic across runs and platforms.
    """
    by_fold: dict[str, list[str]] = defaultdict(list)
    for name in names:
        by_fold[name.casefold()].append(name)
    out: dict[str, str] = {}
    for variants in by_fold.values():
        winner = min(variants, key=lambda n: (-names[n], n.encode("utf-8")))
        for v in variants:
            out[v] = winner
    return out


def disambiguate(records: Sequence[MentionRecord], aliases: AliasTable) -> list[MentionRecord]:
    """Merge case variants onto the dominant form, then apply the alias table.

    Iterates to a fixpoint so the operation is idempotent even when an alias
    target collides with a case variant present in the corpus.
    """
    recs = list(records)
    for _ in range(8):
        freq = Counter(r.raw_name for r in recs)
        fold_map = _case_merge_map(freq)
        changed = False
        out = []
        for r in recs:
            name = aliases.resolve(fold_map[r.raw_name])
            if name != r.raw_name:
                changed = True
                r = MentionRecord(r.paper_id, name, r.curation_label, r.doi,
                                  r.year, r.discipline_codes)
            out.append(r)
        recs = out
        if not changed:
            return recs
    raise ConfigError("disambiguation did not converge; alias table is pathological")


# ---------------------------------------------------------------------------
# filtering and counting


@dataclass
class IngestDiagnostics:
    dropped_no_doi: int = 0
    dropped_no_discipline: int = 0
    dropped_year: int = 0
    dropped_unmapped_code: int = 0
    retained: int = 0
    filter_threshold: Optional[float] = None
    tools_before_filter: int = 0
    tools_after_filter: int = 0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def filter_records(
    records: Iterable[MentionRecord],
    year_range: tuple[int, int] = DEFAULT_YEAR_RANGE,
    diagnostics: Optional[IngestDiagnostics] = None,
) -> Iterator[MentionRecord]:
    """Drop records outside the study years or lacking DOI / discipline codes."""
    d = diagnostics if diagnostics is not None else IngestDiagnostics()
    lo, hi = year_range
    for r in records:
        if not (lo <= r.year <= hi):
            d.dropped_year += 1
            continue
        if r.doi is None:
            d.dropped_no_doi += 1
            continue
        if not r.discipline_codes:
            d.dropped_no_discipline += 1
            continue
        d.retained += 1
        yield r


def build_count_matrix(
    records: Iterable[MentionRecord],
    taxonomy: DisciplineTaxonomy,
    level: str = "division",
    year_range: tuple[int, int] = DEFAULT_YEAR_RANGE,
    diagnostics: Optional[IngestDiagnostics] = None,
) -> CountMatrix:
    """Count distinct papers per (discipline, software) cell.

    A paper counts at most once per cell; a paper carrying k discipline codes
    contributes one unit to each of the k rows.
    """
    if level not in ("division", "group"):
        raise ConfigError(f"unknown level {level!r}")
    d = diagnostics if diagnostics is not None else IngestDiagnostics()
    triples: set[tuple[str, str, str]] = set()
    for r in records:
        codes = set()
        for c in r.discipline_codes:
            mapped = taxonomy.division_of(c) if level == "division" else taxonomy.group_of(c)
            if mapped is None:
                d.dropped_unmapped_code += 1
            else:
                codes.add(mapped)
        for code in codes:
            triples.add((code, r.raw_name, r.paper_id))
    if not triples:
        return CountMatrix(rows=[], cols=[], counts=np.zeros((0, 0), dtype=np.int64),
                           year_range=year_range)
    rows = sorted({t[0] for t in triples})
    cols = sorted({t[1] for t in triples})
    ri = {r: i for i, r in enumerate(rows)}
    ci = {c: i for i, c in enumerate(cols)}
    counts = np.zeros((len(rows), len(cols)), dtype=np.int64)
    for disc, name, _paper in triples:
        counts[ri[disc], ci[name]] += 1
    return CountMatrix(rows=rows, cols=cols, counts=counts, year_range=year_range)


def percentile_filter(m: CountMatrix, pct: float,
                      diagnostics: Optional[IngestDiagnostics] = None) -> CountMatrix:
    """Keep software whose total count strictly exceeds the pct-quantile.

    The quantile is computed by the nearest-rank method on the sorted
    per-software totals, and comparison is strict (totals equal to the
    threshold are dropped).
    """
    if not (0.0 < pct < 1.0):
        raise ConfigError(f"percentile must be in (0,1), got {pct}")
    if not m.cols:
        raise DataError("cannot filter an empty count matrix")
    totals = m.column_totals()
    order = np.sort(totals)
    rank = int(np.ceil(pct * len(order)))          # nearest-rank, 1-based
    threshold = float(order[rank - 1])
    keep = np.flatnonzero(totals > threshold)
    if diagnostics is not None:
        diagnostics.filter_threshold = threshold
        diagnostics.tools_before_filter = len(m.cols)
        diagnostics.tools_after_filter = int(keep.size)
    return CountMatrix(
        rows=list(m.rows),
        cols=[m.cols[int(j)] for j in keep],
        counts=m.counts[:, keep],
        year_range=m.year_range,
    )


# ---------------------------------------------------------------------------
# matrix IO


def write_count_matrix(m: CountMatrix, fh, delimiter: str = ",") -> None:
    w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
    w.writerow(["discipline", "software", "count"])
    for i, disc in enumerate(m.rows):
        for j, name in enumerate(m.cols):
            c = int(m.counts[i, j])
            if c:
                w.writerow([disc, name, c])


def read_count_matrix(stream: Iterable[str], year_range: tuple[int, int] = DEFAULT_YEAR_RANGE,
                      delimiter: str = ",") -> CountMatrix:
    rows = list(csv.reader(stream, delimiter=delimiter))
    if not rows or rows[0] != ["discipline", "software", "count"]:
        raise DataError("bad count matrix header")
    cells = [(r[0], r[1], int(r[2])) for r in rows[1:] if r]
    discs = sorted({c[0] for c in cells})
    names = sorted({c[1] for c in cells})
    ri = {d: i for i, d in enumerate(discs)}
    ci = {n: i for i, n in enumerate(names)}
    counts = np.zeros((len(discs), len(names)), dtype=np.int64)
    for d, n, c in cells:
        counts[ri[d], ci[n]] += c
    return CountMatrix(rows=discs, cols=names, counts=counts, year_range=year_range)


def write_sidecar(diag: IngestDiagnostics, year_range: tuple[int, int], fh) -> None:
    json.dump({"year_range": list(year_range), **diag.to_dict()}, fh, indent=2, sort_keys=True)
    fh.write("\n")
