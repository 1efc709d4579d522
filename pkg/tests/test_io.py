import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from kriging_nn.ensemble import PathEnsemble, Provenance, linear_grid, parse_grid
from kriging_nn.errors import ValidationError
from kriging_nn.gp import Prediction
from kriging_nn.io import (
    read_ensemble,
    read_matrix,
    read_observations,
    read_points,
    write_ensemble,
    write_matrix,
    write_observations,
    write_points,
    write_predictions,
)

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_subnormal=False)


class TestRoundTrip:
    @given(arrays(float, st.tuples(st.integers(1, 6), st.integers(1, 4)), elements=finite))
    @settings(max_examples=30, deadline=None)
    def test_points(self, tmp_path_factory, P):
        path = tmp_path_factory.mktemp("io") / "p.csv"
        write_points(path, P)
        np.testing.assert_array_equal(read_points(path), P)

    def test_matrix_with_jitter(self, tmp_path):
        K = np.array([[1.0, 0.1 + 0.2], [0.1 + 0.2, 1.0]])
        write_matrix(tmp_path / "k.csv", K, jitter=1e-10)
        K2, jitter = read_matrix(tmp_path / "k.csv")
        np.testing.assert_array_equal(K2, K)
        assert jitter == 1e-10
        assert (tmp_path / "k.csv").read_text().splitlines()[0] == "# n=2 jitter=1e-10"

    def test_observations(self, tmp_path):
        P = np.array([[0.0, 1.0], [2.5, -1.0]])
        y = np.array([3.0, 4.0])
        write_observations(tmp_path / "o.csv", P, y)
        P2, y2 = read_observations(tmp_path / "o.csv")
        np.testing.assert_array_equal(P2, P)
        np.testing.assert_array_equal(y2, y)

    def test_ensemble(self, tmp_path):
        ens = PathEnsemble(linear_grid(-1, 1, 4), np.arange(8.0).reshape(2, 4) / 3, Provenance.MLP, 42)
        write_ensemble(tmp_path / "e.csv", ens)
        back = read_ensemble(tmp_path / "e.csv")
        assert back.provenance is Provenance.MLP and back.seed == 42
        np.testing.assert_array_equal(back.grid, ens.grid)
        np.testing.assert_array_equal(back.paths, ens.paths)
        assert (tmp_path / "e.csv").read_text().startswith("# provenance=MLP seed=42\n")

    def test_predictions_header(self, tmp_path):
        preds = [Prediction(np.array([0.5, 1.0]), 1.25, 0.5, False)]
        write_predictions(tmp_path / "pred.csv", preds)
        assert (tmp_path / "pred.csv").read_text() == "x1,x2,mean,variance\n0.5,1.0,1.25,0.5\n"


class TestMalformed:
    def test_non_numeric_names_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1.0,2.0\n# note\n3.0,abc\n")
        with pytest.raises(ValidationError, match=r"bad.csv:3"):
            read_points(path)

    def test_ragged_rows(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text("1.0,2.0\n3.0\n")
        with pytest.raises(ValidationError, match=r":2: expected 2 columns"):
            read_points(path)

    def test_non_finite(self, tmp_path):
        path = tmp_path / "nan.csv"
        path.write_text("1.0\nnan\n")
        with pytest.raises(ValidationError, match=":2"):
            read_points(path)

    def test_empty(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("# nothing\n")
        with pytest.raises(ValidationError):
            read_points(path)
        with pytest.raises(ValidationError):
            read_observations(path)

    def test_observation_needs_value_column(self, tmp_path):
        path = tmp_path / "o.csv"
        path.write_text("1.0\n2.0\n")
        with pytest.raises(ValidationError):
            read_observations(path)

    def test_matrix_row_count(self, tmp_path):
        path = tmp_path / "k.csv"
        path.write_text("# n=3 jitter=0.0\n1.0,0.0\n0.0,1.0\n")
        with pytest.raises(ValidationError, match="n=3"):
            read_matrix(path)

    def test_ensemble_unknown_provenance(self, tmp_path):
        path = tmp_path / "e.csv"
        path.write_text("# provenance=RBF seed=1\n0.0,1.0\n1.0,2.0\n")
        with pytest.raises(ValidationError, match="provenance"):
            read_ensemble(path)

    def test_ensemble_needs_path(self, tmp_path):
        path = tmp_path / "e.csv"
        path.write_text("0.0,1.0\n")
        with pytest.raises(ValidationError):
            read_ensemble(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            read_points(tmp_path / "absent.csv")


class TestGrid:
    def test_parse(self):
        np.testing.assert_array_equal(parse_grid("-3:3:7")[:, 0], np.linspace(-3, 3, 7))

    @pytest.mark.parametrize("bad", ["1:2", "a:b:3", "0:1:0", "1:0:5", "0:1:2.5"])
    def test_parse_rejects(self, bad):
        with pytest.raises(ValidationError):
            parse_grid(bad)

    def test_ensemble_validation(self):
        with pytest.raises(ValidationError):
            PathEnsemble(linear_grid(0, 1, 3), np.ones((2, 4)), Provenance.GP, 0)
        with pytest.raises(ValidationError):
            PathEnsemble(linear_grid(0, 1, 3), np.full((2, 3), np.nan), Provenance.GP, 0)

    def test_same_grid(self):
        a = PathEnsemble(linear_grid(0, 1, 3), np.ones((2, 3)), Provenance.GP, 0)
        b = PathEnsemble(linear_grid(0, 1, 3), np.zeros((5, 3)), Provenance.MLP, 1)
        c = PathEnsemble(linear_grid(0, 2, 3), np.zeros((5, 3)), Provenance.MLP, 1)
        assert a.same_grid(b) and not a.same_grid(c)
