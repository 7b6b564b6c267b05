"""Readers for trade/patent record files and green code lists."""
import contextlib
import io
import logging
import os
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from green_complexity.src.data.codes import (
    ActivityCode, CPC, EXACT, GreenClassification, HS, IPC, PREFIX,
    normalize_code, normalize_scheme, is_valid,
)
from green_complexity.src.errors import DataError, ParseError

logger = logging.getLogger(__name__)

RECORD_COLUMNS = ["geo", "scheme", "activity", "value", "period"]
PATENT_COLUMNS = ["patent_id", "year", "codes", "locations"]

_HS_REGEX = r"(?:\d{2}){1,3}"
_PATENT_REGEX = r"[A-Z]\d{2}(?:[A-Z](?:\d{1,4}(?:/\d{1,6})?)?)?"
_LONG_ROW = "\x00long:"


@dataclass(frozen=True)
class RawRecord:
    """One geo x activity volume for a period."""
    geo: str
    activity: ActivityCode
    value: float
    period: int

    def __post_init__(self):
        if not (self.value >= 0) or not np.isfinite(self.value):
            raise DataError(f"record value must be finite and >= 0, got {self.value}")


@dataclass(frozen=True)
class PatentRecord:
    """A patent with its codes and inventor/applicant locations."""
    patent_id: str
    period: int
    codes: tuple
    locations: tuple

    def __post_init__(self):
        if not self.codes:
            raise DataError(f"patent {self.patent_id} has no codes")
        if not self.locations:
            raise DataError(f"patent {self.patent_id} has no locations")


@dataclass
class RecordSchema:
    """Column mapping and validation rules for a record file.

    Parameters
    ----------
    geo, activity, value, period : str
        Header names of the four required columns.
    scheme : str
        Classification scheme of the activity column.
    min_year, max_year : int, optional
        Inclusive bounds on the period column.
    strict : bool
        Abort on malformed rows (reporting all of them) instead of skipping.
    """
    geo: str = "geo"
    activity: str = "activity"
    value: str = "value"
    period: str = "period"
    scheme: str = HS
    min_year: int = None
    max_year: int = None
    strict: bool = True
    delimiter: str = ","

    @classmethod
    def from_dict(cls, mapping):
        known = {k: v for k, v in mapping.items() if k in cls.__dataclass_fields__}
        unknown = set(mapping) - set(known)
        if unknown:
            raise DataError(f"unknown schema keys: {sorted(unknown)}")
        return cls(**known)


@dataclass
class IngestReport:
    """What happened while reading one input."""
    source: str = None
    rows_read: int = 0
    rows_kept: int = 0
    zero_value_rows: int = 0
    skipped: list = field(default_factory=list)
    zero_geos: list = field(default_factory=list)
    zero_activities: list = field(default_factory=list)
    periods: list = field(default_factory=list)

    def to_dict(self):
        return {
            "source": self.source,
            "rows_read": self.rows_read,
            "rows_kept": self.rows_kept,
            "zero_value_rows": self.zero_value_rows,
            "skipped": [
                {"line": line, "field": name, "message": msg}
                for line, name, msg in self.skipped
            ],
            "zero_geos": list(self.zero_geos),
            "zero_activities": list(self.zero_activities),
            "periods": list(self.periods),
        }


@contextlib.contextmanager
def open_text(stream):
    """Yield a UTF-8 text handle for a path, a byte stream or a text stream."""
    if isinstance(stream, (str, os.PathLike)):
        with open(stream, encoding="utf-8", newline="") as f:
            yield f
        return
    sample = stream.read(0)
    if isinstance(sample, bytes):
        wrapper = io.TextIOWrapper(stream, encoding="utf-8", newline="")
        try:
            yield wrapper
        finally:
            wrapper.detach()
        return
    yield stream


def _source_name(stream):
    if isinstance(stream, (str, os.PathLike)):
        return os.fspath(stream)
    return getattr(stream, "name", None)


def _read_rows(handle, delimiter, required, source):
    """Split a delimited file into a frame of string cells plus line numbers.

    Rows with a wrong field count are returned as issues.
    """
    text = handle.read()
    if not text.strip():
        raise ParseError([(1, "header", "file is empty")], source)
    first_line = text.splitlines()[0]
    header = pd.read_csv(io.StringIO(first_line), sep=delimiter, header=None, dtype=str,
                         keep_default_na=False)
    header = [h.strip() for h in header.iloc[0]]
    missing = [name for name in required if name not in header]
    if missing:
        raise ParseError([(1, name, "missing column") for name in missing], source)

    width = len(header)

    def mark_long(fields):
        # keep the row in place so the index still maps to the line number
        return [f"{_LONG_ROW}{len(fields)}"] + fields[1:width]

    cells = pd.read_csv(
        io.StringIO(text), sep=delimiter, header=None, names=list(range(width)), skiprows=1,
        dtype=str, keep_default_na=False, skip_blank_lines=False, index_col=False,
        engine="python", on_bad_lines=mark_long,
    )
    lines = np.arange(len(cells), dtype=np.int64) + 2
    present = cells.notna().sum(axis=1).to_numpy()
    long_rows = cells[0].str.startswith(_LONG_ROW, na=False).to_numpy()
    # an empty line comes back either as all-missing or as one empty cell
    blank = (present == 0) | ((present == 1) & (cells[0] == "").to_numpy())
    short = (present < width) & ~blank

    issues = [(int(line), "row", f"expected {width} fields, got {int(n)}")
              for line, n in zip(lines[short], present[short])]
    issues += [(int(line), "row", f"expected {width} fields, got {cell[len(_LONG_ROW):]}")
               for line, cell in zip(lines[long_rows], cells[0][long_rows])]
    keep = ~(blank | short | long_rows)
    frame = cells[keep].set_axis(header, axis=1).reset_index(drop=True)
    frame["line"] = lines[keep]
    return frame, issues


def _code_mask(codes, scheme):
    if scheme == HS:
        return codes.str.fullmatch(_HS_REGEX)
    if scheme in (IPC, CPC):
        return codes.str.fullmatch(_PATENT_REGEX)
    return (codes.str.len() > 0) & ~codes.str.contains(r"\s", regex=True)


def _normalized_codes(raw, scheme):
    codes = raw.astype(str).str.strip()
    if scheme in (IPC, CPC):
        codes = codes.str.replace(r"\s+", "", regex=True).str.upper()
    return codes


def read_records(stream, schema=None, report=None):
    """Read a record file into a canonical frame.

    Parameters
    ----------
    stream : path, text stream or byte stream
        UTF-8 delimited text with a header row.
    schema : RecordSchema, optional
        Column mapping; defaults to ``geo,activity,value,period`` with HS codes.
    report : IngestReport, optional
        Filled with row counts and skipped rows.

    Returns
    -------
    frame : pd.DataFrame
        Columns ``geo, scheme, activity, value, period, line``; activity codes
        are in normalized form.
    """
    schema = schema or RecordSchema()
    scheme = normalize_scheme(schema.scheme)
    report = report if report is not None else IngestReport()
    source = _source_name(stream)
    report.source = source

    required = [schema.geo, schema.activity, schema.value, schema.period]
    with open_text(stream) as handle:
        raw, issues = _read_rows(handle, schema.delimiter, required, source)
    report.rows_read = len(raw) + len(issues)

    geo = raw[schema.geo].astype(str).str.strip()
    codes = _normalized_codes(raw[schema.activity], scheme)
    text_values = raw[schema.value].astype(str).str.strip()
    values = pd.to_numeric(text_values, errors="coerce")
    periods = pd.to_numeric(raw[schema.period].astype(str).str.strip(), errors="coerce")

    bad = pd.Series(False, index=raw.index)

    def flag(mask, name, message):
        mask = mask.fillna(True).astype(bool) & ~bad
        for line, cell in zip(raw.loc[mask, "line"], raw.loc[mask, name]):
            issues.append((int(line), name, message.format(cell=cell)))
        bad.loc[mask] = True

    flag(geo.str.len() == 0, schema.geo, "empty geo identifier")
    flag(~_code_mask(codes, scheme), schema.activity, f"invalid {scheme} code {{cell!r}}")
    flag(values.isna() | ~np.isfinite(values.fillna(0.0)), schema.value, "not a number: {cell!r}")
    flag(values < 0, schema.value, "negative value {cell}")
    flag(periods.isna() | (periods != periods.round()), schema.period, "invalid year {cell!r}")
    if schema.min_year is not None:
        flag(periods < schema.min_year, schema.period, f"year {{cell}} before {schema.min_year}")
    if schema.max_year is not None:
        flag(periods > schema.max_year, schema.period, f"year {{cell}} after {schema.max_year}")

    issues.sort()
    if issues:
        if schema.strict:
            raise ParseError(issues, source)
        for line, name, message in issues:
            logger.warning("skipping line %d (%s): %s", line, name, message)
        report.skipped.extend(issues)

    keep = ~bad
    frame = pd.DataFrame({
        "geo": geo[keep].to_numpy(dtype=object),
        "scheme": scheme,
        "activity": codes[keep].to_numpy(dtype=object),
        "value": values[keep].to_numpy(dtype=np.float64),
        "period": periods[keep].to_numpy(dtype=np.int64),
        "line": raw.loc[keep, "line"].to_numpy(dtype=np.int64),
    })
    report.rows_kept = len(frame)
    report.zero_value_rows = int((frame["value"] == 0).sum())
    report.periods = sorted(int(p) for p in frame["period"].unique())
    logger.info(
        "read %d of %d rows from %s (%d with zero value)",
        report.rows_kept, report.rows_read, source or "<stream>", report.zero_value_rows,
    )
    return frame


def parse_records(stream, schema=None, report=None):
    """Parse a record file into RawRecord objects, one per data row.

    Rows with value exactly 0 are kept and counted in ``report``.
    """
    frame = read_records(stream, schema, report)
    return frame_to_records(frame)


def frame_to_records(frame):
    return [
        RawRecord(geo, ActivityCode(scheme, code), float(value), int(period))
        for geo, scheme, code, value, period in frame[["geo", "scheme", "activity", "value", "period"]].itertuples(index=False)
    ]


def records_to_frame(records):
    """Canonical frame for a list of RawRecord."""
    if isinstance(records, pd.DataFrame):
        return records
    return pd.DataFrame(
        [(r.geo, r.activity.scheme, r.activity.code, r.value, r.period) for r in records],
        columns=RECORD_COLUMNS,
    ).astype({"value": np.float64, "period": np.int64})


def _split(cell):
    return [part.strip() for part in cell.split(";") if part.strip()]


def parse_patents(stream, scheme=CPC, strict=True, report=None):
    """Read a patent file with columns patent_id, year, codes, locations.

    ``codes`` and ``locations`` are ``;``-separated. Locations may repeat,
    one entry per inventor or applicant.

    Returns
    -------
    list of PatentRecord
    """
    scheme = normalize_scheme(scheme)
    report = report if report is not None else IngestReport()
    source = _source_name(stream)
    report.source = source
    with open_text(stream) as handle:
        raw, issues = _read_rows(handle, ",", PATENT_COLUMNS, source)
    report.rows_read = len(raw) + len(issues)

    patents, seen = [], {}
    for row in raw.itertuples(index=False):
        line = int(row.line)
        row_issues = []
        patent_id = str(row.patent_id).strip()
        if not patent_id:
            row_issues.append((line, "patent_id", "empty patent id"))
        elif patent_id in seen:
            row_issues.append((line, "patent_id", f"duplicate of line {seen[patent_id]}"))
        try:
            year = int(str(row.year).strip())
        except ValueError:
            row_issues.append((line, "year", f"invalid year {row.year!r}"))
            year = None
        codes = []
        for part in _split(str(row.codes)):
            code = normalize_code(part, scheme)
            if is_valid(code, scheme):
                codes.append(ActivityCode(scheme, code))
            else:
                row_issues.append((line, "codes", f"invalid {scheme} code {part!r}"))
        if not codes and not any(name == "codes" for _, name, _ in row_issues):
            row_issues.append((line, "codes", "no codes"))
        locations = _split(str(row.locations))
        if not locations:
            row_issues.append((line, "locations", "no locations"))
        if row_issues:
            issues.extend(row_issues)
            continue
        seen[patent_id] = line
        patents.append(PatentRecord(patent_id, year, tuple(codes), tuple(locations)))

    issues.sort()
    if issues:
        if strict:
            raise ParseError(issues, source)
        for line, name, message in issues:
            logger.warning("skipping line %d (%s): %s", line, name, message)
        report.skipped.extend(issues)
    report.rows_kept = len(patents)
    report.periods = sorted({p.period for p in patents})
    logger.info("read %d patents from %s", len(patents), source or "<stream>")
    return patents


def parse_green_list(stream, name=None, scheme=CPC):
    """Read a green code list.

    One entry per line: ``<code>`` matches exactly, ``<code>*`` matches every
    code starting with ``<code>``. Lines starting with ``#`` are comments.

    Returns
    -------
    GreenClassification
    """
    scheme = normalize_scheme(scheme)
    source = _source_name(stream)
    entries, issues, seen = [], [], {}
    with open_text(stream) as handle:
        for number, line in enumerate(handle, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            mode = EXACT
            if text.endswith("*"):
                mode, text = PREFIX, text[:-1]
            code = normalize_code(text, scheme)
            if not is_valid(code, scheme):
                issues.append((number, "code", f"invalid {scheme} code {text!r}"))
                continue
            key = (code, mode)
            if key in seen:
                issues.append((number, "code", f"duplicate of line {seen[key]}"))
                continue
            seen[key] = number
            entries.append((ActivityCode(scheme, code), mode))
    if issues:
        raise ParseError(issues, source)
    if not entries:
        raise DataError(f"green list {source or name!r} has no entries")
    if name is None:
        name = os.path.splitext(os.path.basename(source))[0] if source else "green"
    return GreenClassification(name, tuple(entries))


__all__ = [
    "IngestReport", "PatentRecord", "RawRecord", "RecordSchema",
    "frame_to_records", "parse_green_list", "parse_patents", "parse_records",
    "read_records", "records_to_frame",
]
