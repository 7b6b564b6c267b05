import numpy as np
import pytest

from green_complexity.models.bipartite import BinaryBipartite

M0 = [[1, 1, 1], [1, 1, 0], [1, 0, 0]]

HS_CODES = ["0101", "0102", "0103", "0201", "0202", "0203", "0301", "0302", "0303", "0401"]
ENV_GOODS_CODES = ["010121", "440290", "020110", "730820", "030211", "850231", "040110", "854140", "050100", "842121"]


@pytest.fixture
def m0():
    return BinaryBipartite.from_array(M0)


def random_binary(rng, n_geos=20, n_activities=30, fill=0.3):
    """Random 0/1 matrix without empty rows or columns."""
    while True:
        array = (rng.random((n_geos, n_activities)) < fill).astype(np.int8)
        if array.sum(axis=1).all() and array.sum(axis=0).all():
            return BinaryBipartite.from_array(array)


@pytest.fixture
def random_matrices():
    """Factory of seeded random matrices: ``random_matrices(count, **shape)``."""
    def make(count, seed=0, **kwargs):
        rng = np.random.default_rng(seed)
        return [random_binary(rng, **kwargs) for _ in range(count)]
    return make


def circulant_pattern(size, width):
    """Geo g specialized in activities g, g+1, ..., g+width-1 (mod size)."""
    pattern = np.zeros((size, size), dtype=np.int8)
    for g in range(size):
        for k in range(width):
            pattern[g, (g + k) % size] = 1
    return pattern


def write_trade(path, codes):
    """Trade records for 2000 and 2005 whose RCA >= 1 cells form a circulant pattern."""
    pattern = circulant_pattern(len(codes), 3)
    lines = ["geo,activity,value,period"]
    for period, base in ((2000, 2.0), (2005, 1.0)):
        for g in range(pattern.shape[0]):
            for a, code in enumerate(codes):
                value = base * (1 + 9 * pattern[g, a])
                lines.append(f"G{g:02d},{code},{value},{period}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def trade_file(tmp_path):
    return write_trade(tmp_path / "trade.csv", HS_CODES)


@pytest.fixture
def green_trade_file(tmp_path):
    """Like ``trade_file``, half of the products on the environmental goods list."""
    return write_trade(tmp_path / "green_trade.csv", ENV_GOODS_CODES)
