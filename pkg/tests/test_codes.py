import pytest

from green_complexity.src.data.codes import (
    CPC, CUSTOM, EXACT, HS, IPC, PREFIX, ActivityCode, GreenClassification, normalize_scheme,
)
from green_complexity.src.errors import ConfigError, DataError
from green_complexity.src.utils.green_lists import builtin_classification, builtin_scheme, default_list


def test_patent_code_normalization():
    code = ActivityCode.parse(" y02e 10/50 ", "cpc")
    assert code.scheme == CPC
    assert code.code == "Y02E10/50"
    assert str(code) == "Y02E 10/50"
    assert code.digits == 4


def test_patent_code_truncation():
    code = ActivityCode.parse("Y02E 10/50", CPC)
    assert code.truncate(1).code == "Y02"
    assert code.truncate(2).code == "Y02E"
    assert code.truncate(3).code == "Y02E10"
    assert code.truncate(4) == code
    assert code.truncate(None) == code


def test_hs_truncation():
    code = ActivityCode(HS, "010121")
    assert code.digits == 6
    assert code.truncate(4).code == "0101"
    assert code.truncate(2).code == "01"
    with pytest.raises(DataError):
        code.truncate(3)


def test_invalid_codes():
    with pytest.raises(DataError):
        ActivityCode(HS, "123")
    with pytest.raises(DataError):
        ActivityCode.parse("not a code", IPC)


def test_scheme_names():
    assert normalize_scheme("hs") == HS
    assert normalize_scheme("Custom") == "custom"
    with pytest.raises(DataError):
        normalize_scheme("NAICS")


def test_classification_matching():
    classification = GreenClassification("test", (
        (ActivityCode.parse("Y02E", CPC), PREFIX),
        (ActivityCode.parse("H01L 31/04", CPC), EXACT),
    ))
    assert classification.matches(ActivityCode.parse("Y02E 10/50", CPC))
    assert classification.matches(ActivityCode.parse("h01l 31/04", CPC))
    assert not classification.matches(ActivityCode.parse("H01L 31/042", CPC))
    assert not classification.matches(ActivityCode.parse("Y02A 10/00", CPC))


def test_classification_rejects_duplicates():
    entry = (ActivityCode.parse("Y02E", CPC), PREFIX)
    with pytest.raises(DataError):
        GreenClassification("dup", (entry, entry))
    with pytest.raises(DataError):
        GreenClassification("empty", ())


def test_builtin_classification():
    classification = builtin_classification("cpc-y02-y04s")
    assert len(classification.entries) == 9
    assert classification.matches(ActivityCode.parse("Y04S 10/12", CPC))
    assert not classification.matches(ActivityCode.parse("H01L 31/04", CPC))
    with pytest.raises(ConfigError):
        builtin_classification("unknown")


def test_group_prefix_stops_at_group_boundary():
    classification = builtin_classification("ipc-env-tech")
    assert classification.matches(ActivityCode.parse("B03C 3/017", IPC))
    assert classification.matches(ActivityCode.parse("B03C 3", IPC))
    assert not classification.matches(ActivityCode.parse("B03C 30/00", IPC))
    assert classification.matches(ActivityCode.parse("C02F 1/44", IPC))
    assert not classification.matches(ActivityCode.parse("F01N 37/00", IPC))


@pytest.mark.parametrize("name,scheme", [
    ("cpc-y02-y04s", CPC), ("ipc-env-tech", IPC), ("hs-environmental-goods", HS),
])
def test_builtin_lists(name, scheme):
    assert builtin_scheme(name) == scheme
    assert default_list(scheme) == name
    classification = builtin_classification(name)
    assert classification.schemes == {scheme}
    assert all(mode == PREFIX for _, mode in classification.entries)


def test_builtin_hs_list_matches_subheadings():
    classification = builtin_classification("hs-environmental-goods")
    assert classification.matches(ActivityCode(HS, "850231"))
    assert classification.matches(ActivityCode(HS, "854140"))
    assert not classification.matches(ActivityCode(HS, "8502"))
    assert not classification.matches(ActivityCode(HS, "010121"))


def test_no_default_list_for_custom_codes():
    with pytest.raises(ConfigError):
        default_list(CUSTOM)
    with pytest.raises(ConfigError):
        builtin_scheme("hs-2022")
