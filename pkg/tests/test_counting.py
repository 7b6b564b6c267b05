import math

import numpy as np
import pytest

from green_complexity.src.data.codes import CPC, ActivityCode
from green_complexity.src.data.counting import FRACTIONAL, FULL, count_patents
from green_complexity.src.data.parsing import PatentRecord
from green_complexity.src.errors import ConfigError

Y02E = ActivityCode(CPC, "Y02E10/50")
H01L = ActivityCode(CPC, "H01L31/04")


def weights(records):
    return {(r.geo, r.activity.code, r.period): r.value for r in records}


def test_fractional_counting():
    patent = PatentRecord("P1", 2010, (Y02E,), ("r1", "r1", "r2"))
    result = weights(count_patents([patent], FRACTIONAL))
    assert result[("r1", "Y02E10/50", 2010)] == pytest.approx(2 / 3, abs=1e-15)
    assert result[("r2", "Y02E10/50", 2010)] == pytest.approx(1 / 3, abs=1e-15)


def test_full_counting():
    patent = PatentRecord("P1", 2010, (Y02E,), ("r1", "r1", "r2"))
    result = weights(count_patents([patent], FULL))
    assert result == {("r1", "Y02E10/50", 2010): 1.0, ("r2", "Y02E10/50", 2010): 1.0}


def test_codes_split_equally():
    patent = PatentRecord("P1", 2010, (Y02E, H01L), ("r1",))
    result = weights(count_patents([patent], FRACTIONAL))
    assert result == {("r1", "Y02E10/50", 2010): 0.5, ("r1", "H01L31/04", 2010): 0.5}


def test_fractional_conservation():
    patents = [
        PatentRecord(f"P{i}", 2000 + i % 3, (Y02E, H01L)[: 1 + i % 2],
                     tuple(f"r{(i * k) % 7}" for k in range(1, 2 + i % 5)))
        for i in range(50)
    ]
    records = count_patents(patents, FRACTIONAL)
    assert math.isclose(math.fsum(r.value for r in records), len(patents), rel_tol=1e-12)


def test_fractional_conservation_many_patents():
    rng = np.random.default_rng(11)
    codes = [ActivityCode(CPC, f"Y02{letter}10/{n}") for letter in "ABCDE" for n in (10, 20, 50)]
    patents = []
    for i in range(10000):
        n_inventors = int(rng.integers(1, 11))
        locations = tuple(f"r{k}" for k in rng.integers(0, 40, size=n_inventors))
        picked = rng.choice(len(codes), size=int(rng.integers(1, 4)), replace=False)
        patents.append(PatentRecord(f"P{i}", 2000 + i % 5, tuple(codes[k] for k in picked), locations))
    records = count_patents(patents, FRACTIONAL)
    assert math.isclose(math.fsum(r.value for r in records), len(patents), rel_tol=1e-12)
    per_period = {}
    for r in records:
        per_period.setdefault(r.period, []).append(r.value)
    for period, values in per_period.items():
        assert math.isclose(math.fsum(values), 2000, rel_tol=1e-12)


def test_geo_level_and_code_depth():
    patent = PatentRecord("P1", 2010, (Y02E,), ("ITC1", "ITC4", "DE11"))
    result = weights(count_patents([patent], FRACTIONAL, level=2, digits=2))
    assert result[("IT", "Y02E", 2010)] == pytest.approx(2 / 3)
    assert result[("DE", "Y02E", 2010)] == pytest.approx(1 / 3)


def test_invalid_arguments():
    with pytest.raises(ConfigError):
        count_patents([], "half")
    with pytest.raises(ConfigError):
        count_patents([], FULL, level=0)
    assert count_patents([], FULL) == []
