import numpy as np
import pytest

from fdaconc.csvio import (
    CurveFormatError,
    EmptyFileError,
    NonNumericCellError,
    RaggedRowError,
    ingest_curves,
    ingest_grouped_curves,
    ingest_operator,
    write_curves,
    write_operator,
)
from fdaconc.fda_stats import FunctionalSample
from fdaconc.operator_core import CovOperator, Grid


def write(tmp_path, text, name="x.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_plain_rows(tmp_path):
    p = write(tmp_path, "1,2,3,4\n5,6,7,8\n9,10,11,12\n")
    s = ingest_curves(p)
    assert s.n == 3 and s.grid.size == 4
    assert np.allclose(s.grid.weights, 0.25)
    assert s.values[2, 3] == 12


def test_grid_header_trapezoid(tmp_path):
    p = write(tmp_path, "0,0.1,0.3,0.6,1.0\n1,1,1,1,1\n2,2,2,2,2\n")
    s = ingest_curves(p, "grid")
    assert s.n == 2
    assert np.allclose(s.grid.weights, [0.05, 0.15, 0.25, 0.35, 0.2], atol=1e-15)


def test_ragged(tmp_path):
    p = write(tmp_path, "1,2,3\n4,5\n")
    with pytest.raises(RaggedRowError) as err:
        ingest_curves(p)
    assert err.value.row == 2
    assert "row 2" in str(err.value)


def test_non_numeric(tmp_path):
    p = write(tmp_path, "1,2,3\n4,abc,6\n")
    with pytest.raises(NonNumericCellError) as err:
        ingest_curves(p)
    assert (err.value.row, err.value.col) == (2, 2)


def test_non_finite(tmp_path):
    with pytest.raises(NonNumericCellError):
        ingest_curves(write(tmp_path, "1,nan,3\n"))


@pytest.mark.parametrize("text", ["", "\n\n", " , \n"])
def test_empty(tmp_path, text):
    with pytest.raises(EmptyFileError):
        ingest_curves(write(tmp_path, text))


def test_errors_are_distinct():
    kinds = {EmptyFileError, RaggedRowError, NonNumericCellError}
    assert len(kinds) == 3
    assert all(issubclass(k, CurveFormatError) for k in kinds)


def test_bad_grid_header(tmp_path):
    with pytest.raises(CurveFormatError):
        ingest_curves(write(tmp_path, "0,0.5,0.2\n1,2,3\n"), "grid")
    with pytest.raises(EmptyFileError):
        ingest_curves(write(tmp_path, "0,0.5,1\n"), "grid")


def test_expected_grid(tmp_path):
    p = write(tmp_path, "1,2,3\n")
    with pytest.raises(CurveFormatError):
        ingest_curves(p, grid=Grid.uniform(4))
    with pytest.raises(ValueError):
        ingest_curves(p, "columns")


def test_curve_round_trip(tmp_path, rng):
    g = Grid.from_points([0.0, 0.2, 0.5, 1.0])
    s = FunctionalSample(g, rng.standard_normal((5, 4)))
    write_curves(tmp_path / "c.csv", s, with_grid=True)
    back = ingest_curves(tmp_path / "c.csv", "grid")
    assert back.grid == g
    assert np.array_equal(back.values, s.values)


def test_operator_round_trip(tmp_path, rng):
    a = rng.standard_normal((4, 4))
    op = CovOperator(Grid.uniform(4), a @ a.T)
    write_operator(tmp_path / "o.csv", op)
    assert np.array_equal(ingest_operator(tmp_path / "o.csv").kernel, op.kernel)


def test_operator_errors(tmp_path):
    with pytest.raises(CurveFormatError):
        ingest_operator(write(tmp_path, "1,2\n3,4\n5,6\n"))
    with pytest.raises(CurveFormatError):
        ingest_operator(write(tmp_path, "1,2\n3,4\n"))


def test_grouped(tmp_path):
    p = write(tmp_path, "7,1,2\n7,3,4\n2,5,6\n7,0,0\n2,1,1\n")
    ids, groups = ingest_grouped_curves(p)
    assert ids == [7, 2]
    assert [g.n for g in groups] == [3, 2]
    with pytest.raises(CurveFormatError):
        ingest_grouped_curves(write(tmp_path, "1.5,1,2\n", "b.csv"))
