"""Publication corpus handling: parsing, award-code cleanup, eligibility, summaries."""

from __future__ import annotations

import csv
import json
import logging
import math
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, TextIO

log = logging.getLogger(__name__)

PUBLICATION_TYPES = frozenset(
    {
        "article",
        "conference_paper",
        "letter",
        "note",
        "review",
        "editorial",
        "short_survey",
        "book_chapter",
        "other",
    }
)

DEFAULT_INCLUDED_TYPES = frozenset({"article", "conference_paper", "letter", "note"})

CSV_COLUMNS = ("award_code", "year", "pub_type", "fwci", "citations", "title", "source_id")

_CANONICAL_CODE = re.compile(r"^\d{2}/IA/\d{4}$")


class AwardCodeError(ValueError):
    """A grant code that cannot be brought to the canonical YY/IA/XXXX form."""

    def __init__(self, raw: str, reason: str):
        super().__init__(f"bad award code {raw!r}: {reason}")
        self.raw = raw
        self.reason = reason


class CorpusFormatError(Exception):
    """The input stream cannot be read as a record table at all (bad header, not a table)."""


def normalize_award_code(raw: str) -> str:
    """Normalize a grant identifier to the canonical ``YY/IA/XXXX`` form.

    Strips a leading ``SFI/`` prefix and repairs the digit-one-for-letter-I
    typo in the middle segment (``1A`` becomes ``IA``). Only these two
    documented cleanups are applied; anything else that fails the canonical
    pattern raises :class:`AwardCodeError` rather than being guessed at,
    since typo'd codes are known to spawn phantom awards downstream.
    """
    code = raw.strip()
    if code.startswith("SFI/"):
        code = code[len("SFI/") :]
    parts = code.split("/")
    if len(parts) == 3 and parts[1] == "1A":
        code = "/".join((parts[0], "IA", parts[2]))
    if not _CANONICAL_CODE.match(code):
        raise AwardCodeError(raw, "does not match YY/IA/XXXX")
    return code


@dataclass(frozen=True)
class PublicationRecord:
    """One publication attributed to an award, with its precomputed FWCI if any."""

    award_code: str
    year: int
    pub_type: str
    fwci: float | None = None
    citations: int | None = None
    title: str = ""
    source_id: str = ""


@dataclass(frozen=True)
class EligibilityPolicy:
    """Which publication types count as original research, and whether FWCI is required."""

    included_types: frozenset[str] = DEFAULT_INCLUDED_TYPES
    require_fwci: bool = True
    low_fwci_threshold: float = 0.1

    def __post_init__(self) -> None:
        if not self.included_types:
            raise ValueError("included_types must be non-empty")
        unknown = set(self.included_types) - PUBLICATION_TYPES
        if unknown:
            raise ValueError(f"unknown publication types: {sorted(unknown)}")
        if self.low_fwci_threshold < 0:
            raise ValueError("low_fwci_threshold must be >= 0")


@dataclass(frozen=True)
class AwardSummary:
    """Per-award aggregate over its eligible publications."""

    award_code: str
    n_papers: int
    mean_fwci: float | None = None
    budget: float | None = None
    cost_per_paper: float | None = None


@dataclass(frozen=True)
class RowRejection:
    """A rejected input row, kept with enough context to audit by hand."""

    row: int
    reason: str
    raw: str


@dataclass(frozen=True)
class PortfolioTotals:
    """Whole-portfolio bookkeeping over a list of award summaries."""

    n_awards: int
    n_papers: int
    n_awards_with_budget: int
    n_papers_with_budget: int
    total_budget: float | None
    cost_per_paper: float | None


def _parse_pub_type(value: object) -> str:
    text = str(value).strip().lower().replace(" ", "_").replace("-", "_")
    if not text:
        return "other"
    return text if text in PUBLICATION_TYPES else "other"


def _is_absent(value: object) -> bool:
    if value is None:
        return True
    return isinstance(value, str) and value.strip() == ""


def _record_from_fields(fields: Mapping[str, object], row: int, raw: str) -> PublicationRecord | RowRejection:
    code_raw = fields.get("award_code")
    if _is_absent(code_raw):
        return RowRejection(row, "missing award_code", raw)
    try:
        code = normalize_award_code(str(code_raw))
    except AwardCodeError as exc:
        return RowRejection(row, f"award code {exc.reason}", raw)

    year_raw = fields.get("year")
    if _is_absent(year_raw):
        return RowRejection(row, "missing year", raw)
    try:
        year = int(str(year_raw).strip())
    except ValueError:
        return RowRejection(row, f"year {year_raw!r} is not an integer", raw)

    pub_type = _parse_pub_type(fields.get("pub_type", ""))

    fwci: float | None = None
    fwci_raw = fields.get("fwci")
    if not _is_absent(fwci_raw):
        try:
            fwci = float(str(fwci_raw).strip())
        except ValueError:
            return RowRejection(row, f"fwci {fwci_raw!r} is not a number", raw)
        if not math.isfinite(fwci):
            return RowRejection(row, "fwci is not finite", raw)
        if fwci < 0:
            return RowRejection(row, "negative fwci", raw)

    citations: int | None = None
    cit_raw = fields.get("citations")
    if not _is_absent(cit_raw):
        try:
            citations = int(str(cit_raw).strip())
        except ValueError:
            return RowRejection(row, f"citations {cit_raw!r} is not an integer", raw)
        if citations < 0:
            return RowRejection(row, "negative citation count", raw)

    title = "" if _is_absent(fields.get("title")) else str(fields.get("title"))
    source_id = "" if _is_absent(fields.get("source_id")) else str(fields.get("source_id")).strip()

    return PublicationRecord(
        award_code=code,
        year=year,
        pub_type=pub_type,
        fwci=fwci,
        citations=citations,
        title=title,
        source_id=source_id,
    )


def _parse_csv(stream: TextIO) -> tuple[list[PublicationRecord], list[RowRejection]]:
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise CorpusFormatError("empty input: no header row") from None
    cols = [c.strip().lower() for c in header]
    missing = [c for c in CSV_COLUMNS if c not in cols]
    if missing:
        raise CorpusFormatError(f"header is missing columns: {', '.join(missing)}")
    index = {name: cols.index(name) for name in CSV_COLUMNS}

    records: list[PublicationRecord] = []
    rejections: list[RowRejection] = []
    for cells in reader:
        if not cells or all(c.strip() == "" for c in cells):
            continue
        fields = {name: (cells[i] if i < len(cells) else "") for name, i in index.items()}
        out = _record_from_fields(fields, reader.line_num, ",".join(cells))
        if isinstance(out, RowRejection):
            rejections.append(out)
        else:
            records.append(out)
    return records, rejections


def _parse_jsonl(stream: TextIO) -> tuple[list[PublicationRecord], list[RowRejection]]:
    records: list[PublicationRecord] = []
    rejections: list[RowRejection] = []
    for lineno, line in enumerate(stream, start=1):
        raw = line.rstrip("\n")
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            rejections.append(RowRejection(lineno, f"not valid JSON: {exc.msg}", raw))
            continue
        if not isinstance(obj, dict):
            rejections.append(RowRejection(lineno, "line is not a JSON object", raw))
            continue
        out = _record_from_fields(obj, lineno, raw)
        if isinstance(out, RowRejection):
            rejections.append(out)
        else:
            records.append(out)
    return records, rejections


def parse_records(stream: TextIO, fmt: str = "csv") -> tuple[list[PublicationRecord], list[RowRejection]]:
    """Parse publication records from ``stream``.

    ``fmt`` is ``"csv"`` (comma-separated with a header row) or ``"jsonl"``
    (one JSON object per line, same field names). Malformed rows never abort
    the parse: they are collected as :class:`RowRejection` entries with the
    row number and reason. An empty FWCI cell parses to absent, not zero.
    """
    if fmt == "csv":
        return _parse_csv(stream)
    if fmt == "jsonl":
        return _parse_jsonl(stream)
    raise ValueError(f"unknown record format {fmt!r} (expected 'csv' or 'jsonl')")


def read_records(path: str) -> tuple[list[PublicationRecord], list[RowRejection]]:
    """Parse a record file, picking the format from its suffix (.jsonl/.ndjson vs CSV)."""
    fmt = "jsonl" if str(path).lower().endswith((".jsonl", ".ndjson")) else "csv"
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return parse_records(fh, fmt=fmt)


def write_records_csv(records: Iterable[PublicationRecord], stream: TextIO) -> None:
    """Write records back out in the canonical CSV schema (empty cell = absent)."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        writer.writerow(
            [
                r.award_code,
                r.year,
                r.pub_type,
                "" if r.fwci is None else repr(float(r.fwci)),
                "" if r.citations is None else r.citations,
                r.title,
                r.source_id,
            ]
        )


def dedupe_per_award(records: list[PublicationRecord]) -> tuple[list[PublicationRecord], int]:
    """Drop repeated source_ids within one award, keeping the first occurrence.

    Deduplication is per-award only: the same paper may legitimately appear
    under two different awards (transfers between awards happen). Records
    without a source_id are never deduplicated.
    """
    seen: set[tuple[str, str]] = set()
    kept: list[PublicationRecord] = []
    dropped = 0
    for r in records:
        if r.source_id:
            key = (r.award_code, r.source_id)
            if key in seen:
                dropped += 1
                log.warning("duplicate source_id %r within award %s: keeping first", r.source_id, r.award_code)
                continue
            seen.add(key)
        kept.append(r)
    return kept, dropped


def filter_eligible(records: Iterable[PublicationRecord], policy: EligibilityPolicy) -> list[PublicationRecord]:
    """Keep records whose type is included and, if required, that carry an FWCI.

    A literal FWCI of 0 is a value (an uncited paper), not a missing value;
    only records with no FWCI at all are dropped under ``require_fwci``.
    Input order is preserved and no record is mutated.
    """
    return [
        r
        for r in records
        if r.pub_type in policy.included_types and (not policy.require_fwci or r.fwci is not None)
    ]


def split_low_fwci(
    records: Iterable[PublicationRecord], threshold: float
) -> tuple[list[PublicationRecord], list[PublicationRecord]]:
    """Partition records into (below threshold, remainder) by FWCI.

    Every record must carry an FWCI value. The two lists are disjoint and
    together contain exactly the input records, in order.
    """
    low: list[PublicationRecord] = []
    main: list[PublicationRecord] = []
    for r in records:
        if r.fwci is None:
            raise ValueError(f"record {r.source_id or r.title!r} has no FWCI value")
        (low if r.fwci < threshold else main).append(r)
    return low, main


def summarize_awards(
    records: Iterable[PublicationRecord], budgets: Mapping[str, float] | None = None
) -> list[AwardSummary]:
    """Aggregate one summary per distinct award code, sorted by code.

    ``mean_fwci`` is the plain arithmetic mean over the award's records that
    carry an FWCI. ``cost_per_paper`` is budget / paper count when the award
    has a budget entry.
    """
    budgets = budgets or {}
    groups: dict[str, list[PublicationRecord]] = {}
    for r in records:
        groups.setdefault(r.award_code, []).append(r)

    summaries: list[AwardSummary] = []
    for code in sorted(groups):
        rows = groups[code]
        fwcis = [r.fwci for r in rows if r.fwci is not None]
        mean = sum(fwcis) / len(fwcis) if fwcis else None
        budget = budgets.get(code)
        cost = budget / len(rows) if budget is not None and len(rows) >= 1 else None
        summaries.append(
            AwardSummary(
                award_code=code,
                n_papers=len(rows),
                mean_fwci=mean,
                budget=budget,
                cost_per_paper=cost,
            )
        )
    return summaries


def load_budgets(stream: TextIO) -> tuple[dict[str, float], list[RowRejection]]:
    """Read a two-column budget file (award_code, budget_eur) keyed by normalized code."""
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise CorpusFormatError("empty budget file: no header row") from None
    cols = [c.strip().lower() for c in header]
    for required in ("award_code", "budget_eur"):
        if required not in cols:
            raise CorpusFormatError(f"budget header is missing column: {required}")
    code_i, amount_i = cols.index("award_code"), cols.index("budget_eur")

    budgets: dict[str, float] = {}
    rejections: list[RowRejection] = []
    for cells in reader:
        if not cells or all(c.strip() == "" for c in cells):
            continue
        raw = ",".join(cells)
        try:
            code = normalize_award_code(cells[code_i] if code_i < len(cells) else "")
        except AwardCodeError as exc:
            rejections.append(RowRejection(reader.line_num, f"award code {exc.reason}", raw))
            continue
        try:
            amount = float(cells[amount_i]) if amount_i < len(cells) else float("nan")
        except ValueError:
            rejections.append(RowRejection(reader.line_num, "budget_eur is not a number", raw))
            continue
        if not math.isfinite(amount) or amount < 0:
            rejections.append(RowRejection(reader.line_num, "budget_eur must be a finite non-negative amount", raw))
            continue
        budgets[code] = amount
    return budgets, rejections


def portfolio_totals(summaries: Iterable[AwardSummary]) -> PortfolioTotals:
    """Totals across awards; cost per paper covers only awards that have a budget."""
    rows = list(summaries)
    n_awards = len(rows)
    n_papers = sum(s.n_papers for s in rows)
    with_budget = [s for s in rows if s.budget is not None]
    total_budget = sum(s.budget for s in with_budget) if with_budget else None
    papers_with_budget = sum(s.n_papers for s in with_budget)
    cost = total_budget / papers_with_budget if total_budget is not None and papers_with_budget else None
    return PortfolioTotals(
        n_awards=n_awards,
        n_papers=n_papers,
        n_awards_with_budget=len(with_budget),
        n_papers_with_budget=papers_with_budget,
        total_budget=total_budget,
        cost_per_paper=cost,
    )
