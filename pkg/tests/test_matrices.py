import numpy as np
import pytest

from green_complexity.src.data.codes import CPC, EXACT, HS, PREFIX, ActivityCode, GreenClassification
from green_complexity.src.data.matrices import WeightedBipartite, build_matrix, tag_green, tag_patents
from green_complexity.src.data.parsing import IngestReport, PatentRecord, RawRecord
from green_complexity.src.errors import DataError
from green_complexity.src.utils.green_lists import builtin_classification


def hs(code):
    return ActivityCode(HS, code)


RECORDS = [
    RawRecord("ITA", hs("010121"), 1.5, 2000),
    RawRecord("ITA", hs("010122"), 2.0, 2000),
    RawRecord("FRA", hs("020110"), 4.0, 2000),
    RawRecord("ITA", hs("010121"), 0.5, 2000),
    RawRecord("DEU", hs("020110"), 0.0, 2000),
    RawRecord("ITA", hs("010121"), 9.0, 2001),
]


def test_build_matrix():
    report = IngestReport()
    matrix = build_matrix(RECORDS, 2000, report=report)
    assert matrix.geos == ("DEU", "FRA", "ITA")
    assert [a.code for a in matrix.activities] == ["010121", "010122", "020110"]
    np.testing.assert_array_equal(matrix.weights, [[0, 0, 0], [0, 0, 4], [2, 2, 0]])
    assert report.zero_geos == ["DEU"]
    assert matrix.period == 2000


def test_aggregation_depth():
    matrix = build_matrix(RECORDS, 2000, digits=4)
    assert [a.code for a in matrix.activities] == ["0101", "0201"]
    np.testing.assert_array_equal(matrix.weights, [[0, 0], [0, 4], [4, 0]])
    with pytest.raises(DataError):
        build_matrix(RECORDS, 2000, digits=8)


def test_missing_period():
    with pytest.raises(DataError):
        build_matrix(RECORDS, 1999)


def test_order_invariance():
    rng = np.random.default_rng(3)
    records = [
        RawRecord(f"G{rng.integers(5)}", hs(f"0{rng.integers(1, 4)}01"), float(rng.random()), 2000)
        for _ in range(300)
    ]
    expected = build_matrix(records, 2000)
    for _ in range(5):
        shuffled = [records[i] for i in rng.permutation(len(records))]
        assert np.array_equal(build_matrix(shuffled, 2000).weights, expected.weights)


def test_weights_validation():
    with pytest.raises(DataError):
        WeightedBipartite(("a",), (hs("01"),), [[-1.0]])
    with pytest.raises(DataError):
        WeightedBipartite(("a", "a"), (hs("01"),), [[1.0], [2.0]])


def test_tag_green():
    codes = (ActivityCode(CPC, "Y02E10/50"), ActivityCode(CPC, "H01L31/04"), ActivityCode(CPC, "Y04S10/12"))
    matrix = WeightedBipartite(("r1",), codes, [[1.0, 1.0, 1.0]])
    mask = tag_green(matrix, builtin_classification("cpc-y02-y04s"))
    np.testing.assert_array_equal(mask, [True, False, True])


def test_tag_green_scheme_mismatch():
    matrix = build_matrix(RECORDS, 2000)
    with pytest.raises(DataError):
        tag_green(matrix, builtin_classification("cpc-y02-y04s"))


def test_tag_patents():
    patents = [
        PatentRecord("P1", 2010, (ActivityCode(CPC, "Y02E10/50"), ActivityCode(CPC, "H01L31/04")), ("IT",)),
        PatentRecord("P2", 2010, (ActivityCode(CPC, "Y02E10/50"),), ("IT",)),
    ]
    classification = builtin_classification("cpc-y02-y04s")
    assert tag_patents(patents, classification, "any") == {"P1": True, "P2": True}
    assert tag_patents(patents, classification, "all") == {"P1": False, "P2": True}
    with pytest.raises(DataError):
        tag_patents(patents, classification, "most")


def random_cpc_codes(rng, count):
    codes = {
        f"{rng.choice(list('ABHY'))}{rng.integers(1, 4):02d}{rng.choice(list('ABE'))}"
        f"{rng.integers(1, 13)}/{rng.integers(0, 100):02d}"
        for _ in range(count)
    }
    return tuple(ActivityCode(CPC, code) for code in sorted(codes))


def test_tag_green_matches_brute_force_scan():
    rng = np.random.default_rng(12)
    for _ in range(50):
        codes = random_cpc_codes(rng, 60)
        picked = rng.choice(len(codes), size=12, replace=False)
        prefixes = {codes[k].truncate(int(rng.integers(1, 4))) for k in picked[:8]}
        exact = {codes[k] for k in picked[8:]} | {ActivityCode(CPC, "Y02E10/50")}
        classification = GreenClassification(
            "random", tuple((p, PREFIX) for p in sorted(prefixes)) + tuple((e, EXACT) for e in sorted(exact)),
        )
        matrix = WeightedBipartite(("r1",), codes, np.ones((1, len(codes))))
        expected = [
            code in exact or any(code.truncate(p.digits) == p for p in prefixes)
            for code in codes
        ]
        np.testing.assert_array_equal(tag_green(matrix, classification), expected)


def test_aggregation_is_consistent_across_depths():
    rng = np.random.default_rng(6)
    records = [
        RawRecord(f"G{rng.integers(8)}", hs(f"{rng.integers(1, 4):02d}{rng.integers(1, 5):02d}{rng.integers(10, 13)}"),
                  float(rng.random()), 2000)
        for _ in range(500)
    ]
    for k, j in ((6, 4), (6, 2), (4, 2)):
        finer = build_matrix(records, 2000, digits=k)
        regrouped = [
            RawRecord(geo, activity, float(finer.weights[g, a]), 2000)
            for g, geo in enumerate(finer.geos)
            for a, activity in enumerate(finer.activities)
        ]
        direct = build_matrix(records, 2000, digits=j)
        via = build_matrix(regrouped, 2000, digits=j)
        assert via.geos == direct.geos
        assert via.activities == direct.activities
        np.testing.assert_allclose(via.weights, direct.weights, rtol=1e-12)
        assert direct.weights.sum() == pytest.approx(sum(r.value for r in records), rel=1e-12)
