import numpy as np
import pytest

from green_complexity.models.bipartite import BinaryBipartite
from green_complexity.models.complexity import ScoreVector, eci_pci
from green_complexity.models.green import assisted_density, gci, gcp, green_assist_potential, green_scores
from green_complexity.models.relatedness import assist_matrix, proximity
from green_complexity.src.errors import ConfigError, DataError

PCI = ScoreVector("activity", ("a1", "a2", "a3"), [-1.2, 0.0, 1.2], "PCI", "standardized")


def test_gci_on_nested_matrix(m0):
    _, pci = eci_pci(m0)
    index = gci(m0, pci, ["a3"])
    np.testing.assert_array_equal(index.values, [pci["a3"], 0, 0])
    assert index.method == "GCI"


def test_gci_is_additive_over_disjoint_sets(random_matrices):
    m = random_matrices(1)[0]
    _, pci = eci_pci(m)
    first, second = m.activity_labels[:5], m.activity_labels[5:12]
    combined = gci(m, pci, first + second).values
    np.testing.assert_allclose(combined, gci(m, pci, first).values + gci(m, pci, second).values, atol=1e-12)


def test_gci_has_no_cross_geo_leakage(m0):
    changed = BinaryBipartite.from_array([[0, 0, 1], [1, 1, 0], [1, 0, 0]])
    before = gci(m0, PCI, ["a2", "a3"]).values
    after = gci(changed, PCI, ["a2", "a3"]).values
    np.testing.assert_array_equal(before[1:], after[1:])
    assert after[0] == pytest.approx(1.2)


def test_gci_rank_transform(m0):
    index = gci(m0, PCI, ["a1", "a2", "a3"], rank_transform=True)
    np.testing.assert_allclose(index.values, [2, 1, 1 / 3])
    assert index.normalization == "rank"


def test_green_set_must_overlap(m0):
    with pytest.raises(DataError):
        gci(m0, PCI, ["x9"])
    with pytest.raises(DataError):
        gcp(proximity(m0), m0, ["x9"])


def test_gci_needs_green_pci(m0):
    partial = ScoreVector("activity", ("a1", "a2"), [0.0, 1.0], "PCI", "standardized")
    with pytest.raises(DataError):
        gci(m0, partial, ["a3"])


def test_gcp_on_nested_matrix(m0):
    potential = gcp(proximity(m0), m0, ["a2"])
    assert np.isnan(potential.values[0]) and np.isnan(potential.values[1])
    assert potential.values[2] == pytest.approx(4 / 13)
    assert potential.flags["undefined"] == ["g1", "g2"]


def test_gcp_range(random_matrices):
    for m in random_matrices(5):
        potential = gcp(proximity(m), m, m.activity_labels[:10])
        defined = potential.values[~np.isnan(potential.values)]
        assert np.all((defined >= 0) & (defined <= 1))


def test_pci_weighted_gcp(m0):
    plain = gcp(proximity(m0), m0, ["a2", "a3"])
    weighted = gcp(proximity(m0), m0, ["a2", "a3"], weighting="pci", pci=PCI)
    assert plain.values[2] == pytest.approx((4 / 13 + 2 / 11) / 2)
    assert weighted.values[2] == pytest.approx((2 / 3 * 4 / 13 + 2 / 11) / (5 / 3))
    assert weighted.normalization == "pci"


def test_gcp_weighting_errors(m0):
    net = proximity(m0)
    with pytest.raises(ConfigError):
        gcp(net, m0, ["a2"], weighting="size")
    with pytest.raises(ConfigError):
        gcp(net, m0, ["a2"], weighting="pci")


def test_green_scores_frame(m0):
    scores = green_scores(m0, PCI, proximity(m0), ["a2", "a3"])
    frame = scores.to_frame()
    assert list(frame.columns) == ["geo", "gci", "gcp", "n_green_specializations"]
    assert list(frame.n_green_specializations) == [2, 1, 0]
    assert scores.green_activities == ("a2", "a3")
    np.testing.assert_allclose(frame.gci, [1.2, 0, 0])


def test_assisted_density_on_nested_matrix(m0):
    density = assisted_density(assist_matrix(m0, m0), m0)
    assert density.geos == ("g1", "g2", "g3")
    np.testing.assert_allclose(density.values[2], [22 / 49, 10 / 37, 2 / 11])
    np.testing.assert_allclose(density.values[1], [37 / 49, 25 / 37, 5 / 11])
    np.testing.assert_allclose(density.values[0], 1.0)


def test_green_assist_potential_on_nested_matrix(m0):
    b = assist_matrix(m0, m0)
    potential = green_assist_potential(b, m0, m0, ["a3"])
    assert potential.method == "GreenAssistPotential"
    assert np.isnan(potential.values[0])
    np.testing.assert_allclose(potential.values[1:], [5 / 11, 2 / 11])
    both = green_assist_potential(b, m0, m0, ["a2", "a3"])
    assert both.values[2] == pytest.approx((10 / 37 + 2 / 11) / 2)
    assert both.flags["green_activities"] == 2
    assert both.flags["links"] == "all"


def test_green_assist_potential_on_restricted_links(m0):
    b = assist_matrix(m0, m0)
    only_first = np.zeros((3, 3), dtype=bool)
    only_first[0] = True
    potential = green_assist_potential(b, m0, m0, ["a3"], links=only_first)
    np.testing.assert_allclose(potential.values[1:], [1.0, 1.0])
    assert potential.flags["links"] == "validated"
    diagonal = green_assist_potential(b, m0, m0, ["a2", "a3"], links=np.eye(3, dtype=bool))
    np.testing.assert_allclose(diagonal.values[1:], [0.0, 0.0])


def test_green_assist_potential_across_layers(random_matrices):
    src = random_matrices(1, seed=1, n_activities=15)[0]
    dst = random_matrices(1, seed=2, n_activities=30)[0]
    b = assist_matrix(src, dst)
    green = dst.activity_labels[::3]
    potential = green_assist_potential(b, src, dst, green)
    incoming = b.values.sum(axis=0)
    for g in range(len(src.geos)):
        expected = [
            src.as_float()[g] @ b.values[:, a] / incoming[a]
            for a in range(0, 30, 3) if not dst.matrix[g, a] and incoming[a] > 0
        ]
        if expected:
            assert potential.values[g] == pytest.approx(np.mean(expected), abs=1e-12)
        else:
            assert np.isnan(potential.values[g])
    defined = potential.values[~np.isnan(potential.values)]
    assert np.all((defined >= 0) & (defined <= 1 + 1e-12))
    assert potential.flags["source_layer"] == b.source_layer


def test_assist_potential_errors(m0):
    b = assist_matrix(m0, m0)
    other = BinaryBipartite.from_array([[1, 0], [0, 1], [1, 1]])
    with pytest.raises(DataError):
        assisted_density(b, other)
    with pytest.raises(DataError):
        assisted_density(b, m0, links=np.ones((2, 2), dtype=bool))
    with pytest.raises(DataError):
        green_assist_potential(b, m0, other, ["a1"])
    with pytest.raises(DataError):
        green_assist_potential(b, m0, m0, ["x9"])
