import numpy as np
import pytest

from mpmc.errors import DomainError, EmptyPointSet, FormatError, InvalidProjection
from mpmc.points import PointSet, ProjectionIndexSet, project, read_points, write_points


def test_pointset_shape_and_immutability():
    p = PointSet(np.array([[0.2, 0.9], [0.5, 0.5]]))
    assert p.n_points == 2 and p.dim == 2
    with pytest.raises(ValueError):
        p.coords[0, 0] = 0.3


def test_pointset_rejects_out_of_cube():
    with pytest.raises(DomainError):
        PointSet(np.array([[1.5, 0.2]]))
    with pytest.raises(DomainError):
        PointSet(np.array([[-0.1]]))
    with pytest.raises(DomainError):
        PointSet(np.array([[np.nan, 0.2]]))


def test_pointset_rejects_empty():
    with pytest.raises(EmptyPointSet):
        PointSet(np.empty((0, 2)))


def test_boundary_coordinates_accepted():
    p = PointSet(np.array([[0.0, 1.0]]))
    assert p.coords[0, 0] == 0.0 and p.coords[0, 1] == 1.0


def test_project_single_column():
    p = PointSet(np.array([[0.2, 0.9]]))
    q = project(p, [0])
    assert q.dim == 1 and q.coords[0, 0] == 0.2


def test_project_identity():
    p = PointSet(np.random.default_rng(0).random((5, 3)))
    q = project(p, [0, 1, 2])
    assert np.array_equal(q.coords, p.coords)


def test_project_column_order_and_values():
    p = PointSet(np.array([[0.1, 0.5, 0.9], [0.3, 0.2, 0.4]]))
    q = project(p, (0, 2))
    assert np.array_equal(q.coords, np.array([[0.1, 0.9], [0.3, 0.4]]))


def test_project_idempotent_composition():
    rng = np.random.default_rng(1)
    p = PointSet(rng.random((4, 4)))
    once = project(p, [1, 3])
    twice = project(once, [0, 1])
    assert np.array_equal(once.coords, twice.coords)


def test_project_errors():
    p = PointSet(np.array([[0.1, 0.2]]))
    with pytest.raises(InvalidProjection):
        project(p, [2])
    with pytest.raises(InvalidProjection):
        project(p, [])
    with pytest.raises(InvalidProjection):
        project(p, [1, 0])
    with pytest.raises(InvalidProjection):
        ProjectionIndexSet((0, 0))


def test_file_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(2)
    p = PointSet(rng.random((17, 3)))
    path = tmp_path / "pts.csv"
    write_points(p, path)
    q = read_points(path)
    assert q.n_points == p.n_points and q.dim == p.dim
    assert np.array_equal(q.coords, p.coords)


def test_simple_round_trip(tmp_path):
    path = tmp_path / "p.csv"
    write_points(PointSet(np.array([[0.5, 0.5]])), path)
    assert np.array_equal(read_points(path).coords, [[0.5, 0.5]])


def test_read_ragged_row(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("0.1,0.2\n0.1,0.2,0.3\n")
    with pytest.raises(FormatError):
        read_points(path)


def test_read_declared_dim(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("0.1,0.2,0.3\n")
    with pytest.raises(FormatError):
        read_points(path, dim=2)


def test_read_out_of_cube(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("1.5,0.2\n")
    with pytest.raises(DomainError):
        read_points(path)


def test_read_non_numeric(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("0.1,zap\n")
    with pytest.raises(FormatError):
        read_points(path)
