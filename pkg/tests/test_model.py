import math

import numpy as np
import pytest

from atglearn.model import (
    ORBIT,
    GRASP,
    ATGModel,
    Experience,
    ParameterDomainError,
    StructureError,
    fit_gaussian,
    get_or_create_node,
    record_experience,
    spectral_norm,
    transition_dist,
    wrap_angle,
)
from tests.oracles import loop_covariance, power_iteration_norm


def two_node_model():
    m = ATGModel()
    a = m.add_feature("ARtag", "0").id
    b = m.add_feature("ARtag", "1").id
    m.get_or_create_node("ARtag:0", [a])
    m.get_or_create_node("ARtag:1", [b])
    return m


# get_or_create_node ------------------------------------------------------

def test_node_creation_on_empty_model():
    m = ATGModel()
    ids = [m.add_feature("ARtag", "3").id, m.add_feature("ARtag", "0").id]
    node, novel = get_or_create_node(m, "ARtag:3;ARtag:0", ids)
    assert novel and node.key == "ARtag:3;ARtag:0" and node.feature_ids == [0, 1]


def test_node_creation_is_idempotent():
    m = ATGModel()
    first, _ = m.get_or_create_node("ARtag:0")
    again, novel = m.get_or_create_node("ARtag:0")
    assert not novel and again is first and len(m.nodes) == 1


def test_eight_orbit_keys_give_eight_nodes():
    m = ATGModel()
    keys = ["ARtag:0", "ARtag:0;ARtag:1", "ARtag:1", "ARtag:1;ARtag:2",
            "ARtag:2", "ARtag:2;ARtag:3", "ARtag:3", "ARtag:3;ARtag:0"]
    for k in keys + keys:
        m.get_or_create_node(k)
    assert len(m.nodes) == 8


def test_unknown_feature_id_is_structural_error():
    with pytest.raises(StructureError):
        ATGModel().get_or_create_node("ARtag:0", [5])


def test_empty_key_rejected():
    with pytest.raises(StructureError):
        ATGModel().get_or_create_node("")


def test_feature_ids_are_chronological_and_unique():
    m = ATGModel()
    assert [m.add_feature("ARtag", v).id for v in "3012"] == [0, 1, 2, 3]
    assert m.add_feature("ARtag", "0").id == 1


# record_experience --------------------------------------------------------

def test_first_experience_is_thin_gaussian():
    m = two_node_model()
    out = record_experience(m, Experience("ARtag:0", ORBIT, (0.8,), "ARtag:1"))
    e = m.edges[("ARtag:0", "ORBIT", "ARtag:1")]
    assert out.novel_edge and not out.novel_node and out.norm_km1 is None
    assert e.dist.mean[0] == pytest.approx(0.8) and e.dist.cov[0, 0] == pytest.approx(1e-6)
    assert e.visit_count == 1 and e.samples == [(0.8,)]


def test_three_samples_mean_and_unbiased_variance():
    m = two_node_model()
    for x in (0.7, 0.8, 0.9):
        m.record_experience(Experience("ARtag:0", ORBIT, (x,), "ARtag:1"))
    d = m.edges[("ARtag:0", "ORBIT", "ARtag:1")].dist
    assert d.mean[0] == pytest.approx(0.8, abs=1e-12)
    assert d.cov[0, 0] == pytest.approx(0.01, abs=1e-12)


def test_sample_at_mean_shrinks_variance():
    m = two_node_model()
    xs = [0.7, 0.8, 0.9]
    for x in xs:
        m.record_experience(Experience("ARtag:0", ORBIT, (x,), "ARtag:1"))
    out = m.record_experience(Experience("ARtag:0", ORBIT, (0.8,), "ARtag:1"))
    _, cov = loop_covariance([(x,) for x in xs + [0.8]])
    assert out.norm_k < out.norm_km1
    assert out.norm_k == pytest.approx(cov[0, 0], abs=1e-15)
    assert out.norm_km1 == pytest.approx(loop_covariance([(x,) for x in xs])[1][0, 0], abs=1e-15)


def test_unseen_destination_is_created():
    m = two_node_model()
    out = m.record_experience(Experience("ARtag:0", ORBIT, (0.1,), "ARtag:9"))
    assert out.novel_node and "ARtag:9" in m.nodes


def test_out_of_bounds_parameters_rejected():
    m = two_node_model()
    with pytest.raises(ParameterDomainError):
        m.record_experience(Experience("ARtag:0", ORBIT, (4.0,), "ARtag:1"))
    with pytest.raises(ParameterDomainError):
        m.record_experience(Experience("ARtag:0", GRASP, (0.0, 0.0), "ARtag:1"))


def test_unknown_source_rejected():
    with pytest.raises(StructureError):
        two_node_model().record_experience(Experience("nope", ORBIT, (0.0,), "ARtag:1"))


def test_edges_are_a_multigraph_keyed_by_triple():
    m = two_node_model()
    m.record_experience(Experience("ARtag:0", ORBIT, (0.5,), "ARtag:1"))
    m.record_experience(Experience("ARtag:0", GRASP, (0.0, 0.0, 0.0), "ARtag:1"))
    m.record_experience(Experience("ARtag:0", ORBIT, (0.6,), "ARtag:1"))
    assert sorted(m.edges) == [("ARtag:0", "GRASP", "ARtag:1"), ("ARtag:0", "ORBIT", "ARtag:1")]
    assert m.edges[("ARtag:0", "ORBIT", "ARtag:1")].visit_count == 2


# fit_gaussian ------------------------------------------------------------

def test_fit_two_points():
    d = fit_gaussian([[1, 1], [3, 3]])
    np.testing.assert_allclose(d.mean, [2, 2])
    np.testing.assert_allclose(d.cov, [[2, 2], [2, 2]])


def test_fit_single_sample():
    d = fit_gaussian([[5]], thin_var=1e-6)
    assert d.mean[0] == 5 and d.cov[0, 0] == 1e-6 and d.n_samples == 1


def test_fit_standard_normal_draws():
    xs = np.random.default_rng(0).normal(size=(1000, 1))
    assert abs(fit_gaussian(xs).cov[0, 0] - 1.0) < 0.15


def test_fit_errors():
    with pytest.raises(ValueError):
        fit_gaussian([])
    with pytest.raises(ValueError):
        fit_gaussian([[1.0], [1.0, 2.0]])


def test_fit_matches_loop_oracle(rng):
    for _ in range(50):
        n, d = int(rng.integers(2, 30)), int(rng.integers(1, 4))
        xs = rng.normal(size=(n, d)) * rng.uniform(0.01, 3, d)
        mean, cov = loop_covariance(xs.tolist())
        got = fit_gaussian(xs)
        np.testing.assert_allclose(got.mean, mean, atol=1e-12, rtol=0)
        np.testing.assert_allclose(got.cov, cov, atol=1e-12, rtol=0)


def test_circular_fit_across_the_seam():
    d = fit_gaussian([(math.pi - 0.05,), (-math.pi + 0.05,)], circular=True)
    assert abs(wrap_angle(d.mean[0] - math.pi)) < 1e-12
    assert d.cov[0, 0] == pytest.approx(0.005, rel=1e-9)


def test_circular_fit_agrees_with_linear_away_from_seam():
    xs = [(0.7,), (0.8,), (0.9,)]
    a, b = fit_gaussian(xs, circular=True), fit_gaussian(xs)
    assert a.mean[0] == pytest.approx(b.mean[0], abs=1e-12)
    assert a.cov[0, 0] == pytest.approx(b.cov[0, 0], abs=1e-12)


# spectral_norm -----------------------------------------------------------

@pytest.mark.parametrize("cov, expected", [
    (np.diag([4.0, 1.0, 0.25]), 4.0),
    (np.zeros((3, 3)), 0.0),
    (np.array([[2.0, 1.0], [1.0, 2.0]]), 3.0),
])
def test_spectral_norm_examples(cov, expected):
    assert spectral_norm(cov) == pytest.approx(expected, abs=1e-12)


def test_spectral_norm_rejects_asymmetric():
    with pytest.raises(ValueError):
        spectral_norm([[1.0, 0.5], [0.0, 1.0]])


def test_spectral_norm_matches_power_iteration(rng):
    for _ in range(100):
        B = rng.normal(size=(3, 3))
        A = B @ B.T
        assert abs(spectral_norm(A) - power_iteration_norm(A)) < 1e-9


# transition_dist ---------------------------------------------------------

def test_transition_dist_single_edge():
    m = two_node_model()
    for _ in range(5):
        m.record_experience(Experience("ARtag:0", ORBIT, (0.8,), "ARtag:1"))
    assert transition_dist(m, "ARtag:0", "ORBIT") == {"ARtag:1": 1.0}


def test_transition_dist_counts():
    m = two_node_model()
    m.get_or_create_node("ARtag:2")
    for _ in range(3):
        m.record_experience(Experience("ARtag:0", ORBIT, (0.8,), "ARtag:1"))
    m.record_experience(Experience("ARtag:0", ORBIT, (1.6,), "ARtag:2"))
    assert transition_dist(m, "ARtag:0", "ORBIT") == {"ARtag:1": 0.75, "ARtag:2": 0.25}


def test_transition_dist_empty_and_unknown():
    m = two_node_model()
    assert transition_dist(m, "ARtag:0", "GRASP") == {}
    with pytest.raises(StructureError):
        transition_dist(m, "nope", "ORBIT")


def test_validate_and_copy():
    m = two_node_model()
    m.record_experience(Experience("ARtag:0", ORBIT, (0.8,), "ARtag:1"))
    c = m.copy()
    c.validate()
    assert c == m and c is not m
    c.record_experience(Experience("ARtag:0", ORBIT, (0.9,), "ARtag:1"))
    assert c != m


def test_rank_deficient_fit_stays_psd():
    rng = np.random.default_rng(5)
    for _ in range(200):
        xs = rng.normal(size=(2, 3))
        d = fit_gaussian(xs)
        assert np.linalg.eigvalsh(d.cov)[0] >= 0.0
        _, cov = loop_covariance(xs.tolist())
        assert min(np.max(np.abs(d.cov - cov)), np.max(np.abs(d.cov - cov - 1e-6 * np.eye(3)))) < 1e-12
