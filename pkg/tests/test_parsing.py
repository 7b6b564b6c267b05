import io

import pytest

from green_complexity.src.data.codes import CPC, EXACT, HS, PREFIX, ActivityCode
from green_complexity.src.data.parsing import (
    IngestReport, RecordSchema, parse_green_list, parse_patents, parse_records, read_records,
)
from green_complexity.src.errors import DataError, ParseError

TRADE = """geo,activity,value,period
ITA,0101,10.5,2000
FRA,0101,0,2000
ITA,0202,3,2001
"""


def test_parse_records():
    report = IngestReport()
    records = parse_records(io.StringIO(TRADE), report=report)
    assert len(records) == 3
    assert records[0].geo == "ITA"
    assert records[0].activity == ActivityCode(HS, "0101")
    assert records[0].value == 10.5
    assert records[2].period == 2001
    assert report.rows_read == 3
    assert report.zero_value_rows == 1
    assert report.periods == [2000, 2001]


def test_byte_stream():
    records = parse_records(io.BytesIO(TRADE.encode("utf-8")))
    assert [r.geo for r in records] == ["ITA", "FRA", "ITA"]


def test_strict_mode_reports_every_bad_row():
    text = TRADE + "DEU,0101,-1,2000\nDEU,0101,abc,2000\nDEU,01x1,1,2000\n,0101,1,2000\n"
    with pytest.raises(ParseError) as excinfo:
        parse_records(io.StringIO(text))
    assert excinfo.value.lines == [5, 6, 7, 8]
    assert excinfo.value.exit_code == 3


def test_lenient_mode_skips_bad_rows():
    text = TRADE + "DEU,0101,-1,2000\nDEU,0101,1,200x\n"
    report = IngestReport()
    frame = read_records(io.StringIO(text), RecordSchema(strict=False), report)
    assert len(frame) == 3
    assert [line for line, _, _ in report.skipped] == [5, 6]


def test_wrong_field_count():
    with pytest.raises(ParseError) as excinfo:
        parse_records(io.StringIO(TRADE + "DEU,0101\n"))
    assert excinfo.value.lines == [5]


def test_long_row_and_blank_lines():
    text = TRADE + "DEU,0101,1,2000,extra\n\nDEU,0101,-1,2000\n"
    with pytest.raises(ParseError) as excinfo:
        parse_records(io.StringIO(text))
    assert excinfo.value.lines == [5, 7]
    report = IngestReport()
    frame = read_records(io.StringIO(text), RecordSchema(strict=False), report)
    assert list(frame["line"]) == [2, 3, 4]
    assert report.skipped[0] == (5, "row", "expected 4 fields, got 5")


def test_large_file_lists_every_bad_line():
    rows = [f"G{i % 97},{(i % 90) + 10:02d}{(i % 7) + 10:02d},{i % 13},2010" for i in range(10000)]
    bad = {1234: "G1,0101,-2,2010", 5678: "G2,01x1,1,2010", 9999: "G3,0101"}
    for index, row in bad.items():
        rows[index] = row
    text = "geo,activity,value,period\n" + "\n".join(rows) + "\n"
    with pytest.raises(ParseError) as excinfo:
        parse_records(io.StringIO(text))
    assert excinfo.value.lines == [index + 2 for index in sorted(bad)]


def test_missing_column():
    with pytest.raises(ParseError):
        parse_records(io.StringIO("geo,activity,value\nITA,0101,1\n"))


def test_custom_schema():
    text = "region;code;count;year\nITC1;Y02E 10/50;2;2010\n"
    schema = RecordSchema.from_dict({
        "geo": "region", "activity": "code", "value": "count", "period": "year",
        "scheme": "CPC", "delimiter": ";",
    })
    records = parse_records(io.StringIO(text), schema)
    assert records[0].activity == ActivityCode(CPC, "Y02E10/50")
    with pytest.raises(DataError):
        RecordSchema.from_dict({"colour": "red"})


def test_year_bounds():
    with pytest.raises(ParseError) as excinfo:
        parse_records(io.StringIO(TRADE), RecordSchema(min_year=2001))
    assert excinfo.value.lines == [2, 3]


PATENTS = """patent_id,year,codes,locations
P1,2010,Y02E 10/50;H01L 31/04,IT;IT;DE
P2,2011,y02e10/50,FR
"""


def test_parse_patents():
    patents = parse_patents(io.StringIO(PATENTS))
    assert [p.patent_id for p in patents] == ["P1", "P2"]
    assert patents[0].codes == (ActivityCode(CPC, "Y02E10/50"), ActivityCode(CPC, "H01L31/04"))
    assert patents[0].locations == ("IT", "IT", "DE")
    assert patents[1].codes == (ActivityCode(CPC, "Y02E10/50"),)


def test_duplicate_patent_id():
    with pytest.raises(ParseError) as excinfo:
        parse_patents(io.StringIO(PATENTS + "P1,2012,Y02E 10/50,IT\n"))
    assert excinfo.value.lines == [4]


def test_parse_green_list():
    text = "# climate\nY02E*\nH01L 31/04\n\n"
    classification = parse_green_list(io.StringIO(text), name="mine")
    assert classification.name == "mine"
    assert classification.entries == (
        (ActivityCode(CPC, "Y02E"), PREFIX),
        (ActivityCode(CPC, "H01L31/04"), EXACT),
    )


def test_green_list_errors():
    with pytest.raises(ParseError):
        parse_green_list(io.StringIO("Y02E*\nY02E*\n"))
    with pytest.raises(ParseError):
        parse_green_list(io.StringIO("bogus code\n"))
    with pytest.raises(DataError):
        parse_green_list(io.StringIO("# nothing\n"))
