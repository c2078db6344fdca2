import numpy as np
import pytest

from evoreg import GradedMesh, uniform_mesh


def test_graded_nodes_shape_and_endpoints():
    m = GradedMesh(2.0, 10, 3.0)
    assert m.nodes.size == 11
    assert m.nodes[0] == 0.0
    assert m.nodes[-1] == 2.0
    assert np.all(np.diff(m.nodes) > 0)
    assert np.allclose(m.nodes, 2.0 * (np.arange(11) / 10.0) ** 3.0)


def test_grading_concentrates_early_nodes():
    u = uniform_mesh(1.0, 100)
    g = GradedMesh(1.0, 100, 2.0)
    assert g.nodes[1] < u.nodes[1]
    assert np.sum(g.nodes < 0.1) > np.sum(u.nodes < 0.1)
    assert u.is_uniform and not g.is_uniform


def test_steps_sum_to_horizon():
    m = GradedMesh(3.5, 17, 1.7)
    assert np.sum(m.steps) == pytest.approx(3.5, rel=1e-15)


def test_refined_keeps_grading():
    m = GradedMesh(1.0, 8, 2.0)
    f = m.refined(2)
    assert f.K == 16 and f.r == 2.0 and f.T == 1.0
    # refinement nests nothing in general, but endpoints agree
    assert f.nodes[0] == 0.0 and f.nodes[-1] == 1.0
    with pytest.raises(ValueError):
        m.refined(0)


def test_mesh_validation():
    with pytest.raises(ValueError, match="horizon"):
        GradedMesh(0.0, 10)
    with pytest.raises(ValueError, match="step"):
        GradedMesh(1.0, 0)
    with pytest.raises(ValueError, match="grading"):
        GradedMesh(1.0, 10, 0.5)
