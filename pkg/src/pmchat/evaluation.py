"""Expert-rating bookkeeping and distribution reports.

Ratings fall into exactly four categories (Good, Mediocre, Bad, NA).
Distribution percentages are integers computed with round-half-up over the
exact counts, and the raw counts are always reported alongside so rounding
never hides data.
"""

from __future__ import annotations

import csv
import io
import threading
from dataclasses import dataclass
from pathlib import Path

from .errors import EmptyReportError, ValidationError

CATEGORIES = ("Good", "Mediocre", "Bad", "NA")
_CATEGORY_ALIASES = {
    "good": "Good",
    "mediocre": "Mediocre",
    "bad": "Bad",
    "na": "NA",
    "n.a.": "NA",
    "n.a": "NA",
    "not available": "NA",
}

GROUP_BY_CHOICES = ("overall", "sector", "gender", "style")

IMPORT_HEADER = ("category", "sector", "gender", "style", "module")

_RATINGS_FIELDS = (
    "rating_id",
    "session_id",
    "module",
    "style",
    "category",
    "sector",
    "gender",
    "experience_years",
)


def parse_category(text: str) -> str:
    try:
        return _CATEGORY_ALIASES[text.strip().lower()]
    except KeyError:
        raise ValidationError(
            f"invalid rating category {text!r}; expected one of {', '.join(CATEGORIES)}"
        ) from None


def round_half_up_percent(count: int, total: int) -> int:
    """Integer percentage of count/total with exact round-half-up arithmetic."""
    if total <= 0:
        raise ValidationError("percentage needs a positive total")
    return (200 * count + total) // (2 * total)


@dataclass(frozen=True)
class RatingRecord:
    rating_id: str
    category: str
    sector: str = ""
    gender: str = ""
    style: str = ""
    module: str = ""
    session_id: str = ""
    experience_years: float | None = None

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise ValidationError(
                f"invalid rating category {self.category!r}; expected one of {CATEGORIES}"
            )


@dataclass(frozen=True)
class GroupDistribution:
    total: int
    counts: dict[str, int]
    percentages: dict[str, int]

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "counts": dict(self.counts),
            "percentages": dict(self.percentages),
        }


@dataclass(frozen=True)
class DistributionReport:
    group_by: str
    groups: dict[str, GroupDistribution]

    def to_dict(self) -> dict:
        return {
            "group_by": self.group_by,
            "groups": {label: g.to_dict() for label, g in self.groups.items()},
        }


@dataclass(frozen=True)
class StyleComparison:
    zero_shot: GroupDistribution | None
    optimized: GroupDistribution | None
    good_delta: int | None

    def to_dict(self) -> dict:
        return {
            "zero_shot": self.zero_shot.to_dict() if self.zero_shot else None,
            "optimized": self.optimized.to_dict() if self.optimized else None,
            "good_delta": self.good_delta,
        }


def _distribution_of(records: list[RatingRecord]) -> GroupDistribution:
    counts = {category: 0 for category in CATEGORIES}
    for record in records:
        counts[record.category] += 1
    total = len(records)
    return GroupDistribution(
        total=total,
        counts=counts,
        percentages={c: round_half_up_percent(counts[c], total) for c in CATEGORIES},
    )


def _group_label(record: RatingRecord, group_by: str) -> str:
    if group_by == "overall":
        return "overall"
    value = getattr(record, group_by)
    return value or "unknown"


def distribution(
    records: list[RatingRecord],
    group_by: str = "overall",
    *,
    sector: str | None = None,
    gender: str | None = None,
    style: str | None = None,
    module: str | None = None,
) -> DistributionReport:
    """Category distribution per group, sorted lexicographically by group label."""
    if group_by not in GROUP_BY_CHOICES:
        raise ValidationError(f"group_by must be one of {GROUP_BY_CHOICES}")
    filtered = [
        r
        for r in records
        if (sector is None or r.sector == sector)
        and (gender is None or r.gender == gender)
        and (style is None or r.style == style)
        and (module is None or r.module == module)
    ]
    if not filtered:
        raise EmptyReportError("no rating records match the requested filters")
    grouped: dict[str, list[RatingRecord]] = {}
    for record in filtered:
        grouped.setdefault(_group_label(record, group_by), []).append(record)
    return DistributionReport(
        group_by=group_by,
        groups={label: _distribution_of(grouped[label]) for label in sorted(grouped)},
    )


def compare_styles(records: list[RatingRecord]) -> StyleComparison:
    """Zero-shot vs optimized distributions plus the Good-percentage delta."""
    zero = [r for r in records if r.style == "zero_shot"]
    opt = [r for r in records if r.style == "optimized"]
    zero_dist = _distribution_of(zero) if zero else None
    opt_dist = _distribution_of(opt) if opt else None
    delta = None
    if zero_dist and opt_dist:
        delta = opt_dist.percentages["Good"] - zero_dist.percentages["Good"]
    return StyleComparison(zero_shot=zero_dist, optimized=opt_dist, good_delta=delta)


def import_ratings_csv(raw_text: str) -> tuple[list[dict], list[tuple[int, str]]]:
    """Parse the rating import format; returns (valid rows, row errors).

    The header must be exactly ``category,sector,gender,style,module``.
    Rows with an invalid category are rejected individually with a message
    rather than aborting the import.
    """
    reader = csv.reader(io.StringIO(raw_text))
    try:
        header = tuple(h.strip() for h in next(reader))
    except StopIteration:
        raise ValidationError("ratings CSV is empty") from None
    if header != IMPORT_HEADER:
        raise ValidationError(
            f"ratings CSV header must be {','.join(IMPORT_HEADER)!r}, got {','.join(header)!r}"
        )
    rows: list[dict] = []
    errors: list[tuple[int, str]] = []
    for line_number, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        values = dict(zip(IMPORT_HEADER, (cell.strip() for cell in row)))
        try:
            values["category"] = parse_category(values.get("category", ""))
        except ValidationError as exc:
            errors.append((line_number, exc.message))
            continue
        rows.append(values)
    return rows, errors


class RatingsStore:
    """Append-only ratings file: single writer, concurrent readers."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def record_rating(self, **fields) -> RatingRecord:
        with self._lock:
            record = RatingRecord(rating_id=self._next_id_unlocked(), **fields)
            exists = self.path.exists()
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", newline="", encoding="utf-8") as handle:
                writer = csv.writer(handle, lineterminator="\n")
                if not exists:
                    writer.writerow(_RATINGS_FIELDS)
                writer.writerow(
                    [
                        record.rating_id,
                        record.session_id,
                        record.module,
                        record.style,
                        record.category,
                        record.sector,
                        record.gender,
                        "" if record.experience_years is None else record.experience_years,
                    ]
                )
        return record

    def _next_id_unlocked(self) -> str:
        return f"rt{self._count_unlocked() + 1:04d}"

    def _count_unlocked(self) -> int:
        if not self.path.exists():
            return 0
        with self.path.open("r", encoding="utf-8") as handle:
            return max(sum(1 for _ in handle) - 1, 0)

    def load_records(self) -> list[RatingRecord]:
        if not self.path.exists():
            return []
        records = []
        with self.path.open("r", newline="", encoding="utf-8") as handle:
            for row in csv.DictReader(handle):
                years = row.get("experience_years") or ""
                records.append(
                    RatingRecord(
                        rating_id=row["rating_id"],
                        session_id=row.get("session_id", ""),
                        module=row.get("module", ""),
                        style=row.get("style", ""),
                        category=row["category"],
                        sector=row.get("sector", ""),
                        gender=row.get("gender", ""),
                        experience_years=float(years) if years else None,
                    )
                )
        return records


def render_distribution_text(report: DistributionReport) -> str:
    """Aligned-column text: one row per group, a column per category (% and count)."""
    header = ["group", "total"] + [f"{c}%" for c in CATEGORIES] + [f"{c}#" for c in CATEGORIES]
    rows = [header]
    for label, dist in report.groups.items():
        rows.append(
            [label, str(dist.total)]
            + [str(dist.percentages[c]) for c in CATEGORIES]
            + [str(dist.counts[c]) for c in CATEGORIES]
        )
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip() for row in rows]
    return "\n".join(lines)
