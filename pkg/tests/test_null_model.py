import numpy as np
import pytest

from green_complexity.models.bipartite import BinaryBipartite
from green_complexity.models.null_model import fit_bicm, validate_links
from green_complexity.models.relatedness import assist_matrix
from green_complexity.src.errors import ConfigError, DataError


def test_all_ones_is_forced():
    null = fit_bicm(BinaryBipartite.from_array(np.ones((3, 4), dtype=int)))
    assert np.all(null.probabilities == 1.0)
    assert np.isnan(null.x).all() and np.isnan(null.y).all()


def test_nested_matrix_is_fully_forced(m0):
    null = fit_bicm(m0)
    np.testing.assert_array_equal(null.probabilities, m0.matrix)
    rows, cols = null.expected_degrees()
    np.testing.assert_allclose(rows, [3, 2, 1], atol=1e-8)
    np.testing.assert_allclose(cols, [3, 2, 1], atol=1e-8)


def test_expected_degrees_match(random_matrices):
    rng = np.random.default_rng(21)
    for k in range(100):
        n_geos, n_activities = int(rng.integers(10, 51)), int(rng.integers(15, 81))
        fill = float(rng.uniform(0.2, 0.5))
        m = random_matrices(1, seed=100 + k, n_geos=n_geos, n_activities=n_activities, fill=fill)[0]
        null = fit_bicm(m)
        rows, cols = null.expected_degrees()
        np.testing.assert_allclose(rows, m.matrix.sum(axis=1), atol=1e-8)
        np.testing.assert_allclose(cols, m.matrix.sum(axis=0), atol=1e-8)
        product = np.outer(null.x, null.y)
        fitted = ~np.isnan(product)
        np.testing.assert_allclose(null.probabilities[fitted], (product / (1 + product))[fitted], rtol=1e-12)


def test_equal_degrees_share_multipliers():
    m = BinaryBipartite.from_array([[1, 1, 0, 0], [0, 1, 1, 0], [0, 0, 1, 1], [1, 0, 0, 1]])
    null = fit_bicm(m)
    np.testing.assert_allclose(null.probabilities, 0.5, atol=1e-10)


def test_forced_rows_mixed_with_fitted_ones():
    m = BinaryBipartite.from_array([[1, 1, 1, 1], [1, 0, 1, 0], [0, 1, 0, 1], [0, 0, 0, 0]])
    null = fit_bicm(m)
    np.testing.assert_array_equal(null.probabilities[0], 1)
    np.testing.assert_array_equal(null.probabilities[3], 0)
    assert np.isnan(null.x[[0, 3]]).all()
    rows, cols = null.expected_degrees()
    np.testing.assert_allclose(rows, [4, 2, 2, 0], atol=1e-8)
    np.testing.assert_allclose(cols, [2, 2, 2, 2], atol=1e-8)


def test_sampling_follows_probabilities():
    m = BinaryBipartite.from_array([[1, 1, 0, 0], [0, 1, 1, 0], [0, 0, 1, 1], [1, 0, 0, 1]])
    null = fit_bicm(m)
    rng = np.random.default_rng(0)
    mean = np.mean([null.sample(rng) for _ in range(4000)], axis=0)
    np.testing.assert_allclose(mean, 0.5, atol=0.05)


def test_certain_null_rejects_nothing(m0):
    null = fit_bicm(m0)
    network = validate_links(assist_matrix(m0, m0), null, null, samples=100)
    assert np.all(network.p_values == 1.0)
    assert not network.significant.any()
    assert network.n_tested == 9


def concentrated_matrix():
    """g1..g5 hold only a1; g6..g30 hold six of a2..a10 each."""
    array = np.zeros((30, 10), dtype=np.int8)
    array[:5, 0] = 1
    for g in range(5, 30):
        for k in range(6):
            array[g, 1 + (g + k) % 9] = 1
    return BinaryBipartite.from_array(array)


def test_strongest_link_has_small_p_value():
    m = concentrated_matrix()
    b = assist_matrix(m, m)
    assert b.values[0, 0] == pytest.approx(1.0)
    null = fit_bicm(m)
    network = validate_links(b, null, null, samples=200, seed=3)
    assert network.p_values[0, 0] <= 5 / 201
    assert np.all(network.p_values >= 1 / 201)
    assert np.all(network.p_values[b.values == 0] == 1.0)


def random_network(random_matrices):
    src, dst = random_matrices(2, seed=9, n_geos=10, n_activities=12)
    return assist_matrix(src, dst), fit_bicm(src), fit_bicm(dst)


def test_seed_reproducibility(random_matrices):
    b, null_src, null_dst = random_network(random_matrices)
    first = validate_links(b, null_src, null_dst, samples=100, seed=7, workers=1)
    again = validate_links(b, null_src, null_dst, samples=100, seed=7, workers=1)
    threaded = validate_links(b, null_src, null_dst, samples=100, seed=7, workers=3)
    np.testing.assert_array_equal(first.p_values, again.p_values)
    np.testing.assert_array_equal(first.p_values, threaded.p_values)
    np.testing.assert_array_equal(first.significant, threaded.significant)


def test_worker_count_from_environment(random_matrices, monkeypatch):
    b, null_src, null_dst = random_network(random_matrices)
    baseline = validate_links(b, null_src, null_dst, samples=100, seed=1, workers=1)
    monkeypatch.setenv("GREEN_COMPLEXITY_THREADS", "2")
    threaded = validate_links(b, null_src, null_dst, samples=100, seed=1)
    np.testing.assert_array_equal(baseline.p_values, threaded.p_values)


@pytest.mark.parametrize("correction", ["bonferroni", "bh-fdr"])
def test_significant_links_pass_alpha(random_matrices, correction):
    b, null_src, null_dst = random_network(random_matrices)
    network = validate_links(b, null_src, null_dst, samples=100, alpha=0.2, correction=correction)
    assert np.all(network.adjusted[network.significant] <= 0.2)
    assert not network.significant[b.values == 0].any()
    edges = network.edges()
    assert len(edges) == network.significant.sum()
    assert list(edges.columns) == ["source", "target", "weight", "p_value", "p_adjusted", "significant"]


def test_validation_arguments(m0):
    null = fit_bicm(m0)
    b = assist_matrix(m0, m0)
    with pytest.raises(ConfigError):
        validate_links(b, null, null, samples=99)
    with pytest.raises(ConfigError):
        validate_links(b, null, null, alpha=1.5)
    with pytest.raises(ConfigError):
        validate_links(b, null, null, correction="holm")
    other = fit_bicm(BinaryBipartite.from_array([[1, 0], [0, 1]]))
    with pytest.raises(DataError):
        validate_links(b, other, null)
