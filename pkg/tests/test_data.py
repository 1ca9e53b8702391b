import numpy as np
import pytest
from hypothesis import given, strategies as st

from repselect.data import (
    DataError,
    DimensionError,
    DistanceMatrix,
    LabelError,
    Selection,
    SizeError,
    bits_from_str,
    bits_to_str,
    make_data_matrix,
    read_data_csv,
    selection_from_bits,
)


def test_make_data_matrix_minimal():
    dm = make_data_matrix([[0, 0], [3, 4]])
    assert (dm.n, dm.m) == (2, 2)
    assert dm.labels is None


def test_make_data_matrix_with_labels():
    dm = make_data_matrix([[1], [2], [3]], labels=["a", "b", "c"])
    assert (dm.n, dm.m) == (3, 1)
    assert dm.label_of(1) == "b"


def test_ragged_rows_rejected():
    with pytest.raises(DimensionError):
        make_data_matrix([[1, 2], [3]])


def test_duplicate_labels_rejected():
    with pytest.raises(LabelError):
        make_data_matrix([[1], [2]], labels=["a", "a"])


@pytest.mark.parametrize("rows", [[], [[1.0, 2.0]]])
def test_too_few_rows(rows):
    with pytest.raises(SizeError):
        make_data_matrix(rows)


def test_data_matrix_is_immutable():
    dm = make_data_matrix([[0, 0], [3, 4]])
    with pytest.raises(ValueError):
        dm.rows[0, 0] = 1.0


def test_selection_from_bits_examples():
    assert selection_from_bits([1, 0, 1, 0]).chosen == (0, 2)
    assert selection_from_bits([0, 0, 0]).chosen == ()
    assert selection_from_bits([1, 1, 1]).chosen == (0, 1, 2)


@given(st.lists(st.integers(0, 1), min_size=1, max_size=40))
def test_selection_round_trip(bits):
    sel = selection_from_bits(bits)
    assert sel.bits.tolist() == bits
    assert len(sel) == sum(bits)


def test_selection_rejects_unsorted():
    with pytest.raises(ValueError):
        Selection((2, 1), 3)
    with pytest.raises(ValueError):
        Selection((0, 5), 3)


def test_bit_string_round_trip():
    assert bits_to_str([0, 1, 1]) == "011"
    assert bits_from_str("0101").tolist() == [0, 1, 0, 1]
    with pytest.raises(DataError):
        bits_from_str("01x")


def test_distance_matrix_mirrors_one_triangle():
    raw = np.array([[5.0, 1.0, 2.0], [9.0, 5.0, 3.0], [9.0, 9.0, 5.0]])
    d = DistanceMatrix.from_upper(raw).entries
    assert np.array_equal(d, d.T)
    assert np.all(np.diag(d) == 0)
    assert d[0, 1] == 1.0 and d[1, 2] == 3.0


def test_distance_matrix_rejects_negative():
    with pytest.raises(DataError):
        DistanceMatrix.from_upper(np.array([[0.0, -1.0], [-1.0, 0.0]]))


def test_csv_round_trip_with_labels(tmp_path):
    dm = make_data_matrix([[0.1, 2.0], [3.0, -4.5], [1e-17, 7.0]], labels=["AAPL", "MSFT", "ZS"])
    p = tmp_path / "d.csv"
    dm.to_csv(p)
    back = read_data_csv(p)
    assert back.labels == dm.labels
    assert np.array_equal(back.rows, dm.rows)


def test_csv_without_header_or_labels(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("0,0\n3,4\n")
    dm = read_data_csv(p)
    assert dm.labels is None
    assert dm.rows.tolist() == [[0.0, 0.0], [3.0, 4.0]]


def test_csv_with_header_no_labels(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("x,y\n0,0\n3,4\n")
    assert read_data_csv(p).n == 2
