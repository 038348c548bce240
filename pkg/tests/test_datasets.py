import numpy as np
import pytest

from lambda_saga import DIGIT_SPLIT, DatasetError, LabelRule, load_dataset


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLabelRule:
    def test_digit_split(self):
        assert DIGIT_SPLIT.classify(0.0) == 0.0
        assert DIGIT_SPLIT.classify(4.0) == 0.0
        assert DIGIT_SPLIT.classify(5.0) == 1.0
        assert DIGIT_SPLIT.classify(9.0) == 1.0

    def test_outside_domain(self):
        with pytest.raises(DatasetError, match="outside rule domain"):
            DIGIT_SPLIT.classify(12.0)

    def test_threshold_constructor(self):
        rule = LabelRule.threshold(1, [0, 1])
        assert rule.classify(0.0) == 0.0
        assert rule.classify(1.0) == 1.0


class TestDenseCsv:
    def test_digit_binarization(self, tmp_path):
        path = write(tmp_path, "data.csv", "0,1.0,2.0\n7,3.0,4.0\n3,5.0,6.0\n")
        problem = load_dataset(path)
        assert problem.n_components == 3
        assert problem.dim == 2
        assert np.array_equal(problem.labels, [0.0, 1.0, 0.0])
        assert np.array_equal(problem.features[1], [3.0, 4.0])

    def test_empty_file(self, tmp_path):
        path = write(tmp_path, "empty.csv", "")
        with pytest.raises(DatasetError, match="no rows"):
            load_dataset(path)

    def test_ragged_row_named(self, tmp_path):
        path = write(tmp_path, "ragged.csv",
                     "0,1,2,3,4\n1,9,9,9,9\n0,1,2,3\n")
        with pytest.raises(DatasetError, match="row 3"):
            load_dataset(path)

    def test_non_numeric_cell_named(self, tmp_path):
        path = write(tmp_path, "bad.csv", "0,1,2\n1,x,3\n")
        with pytest.raises(DatasetError, match="row 2"):
            load_dataset(path)

    def test_label_outside_domain_named(self, tmp_path):
        path = write(tmp_path, "labels.csv", "0,1,2\n42,3,4\n")
        with pytest.raises(DatasetError, match="row 2"):
            load_dataset(path)

    def test_label_column_and_delimiter(self, tmp_path):
        path = write(tmp_path, "semi.csv", "1.0;2.0;6\n3.0;4.0;1\n")
        problem = load_dataset(path, label_column=-1, delimiter=";")
        assert np.array_equal(problem.labels, [1.0, 0.0])
        assert np.array_equal(problem.features, [[1.0, 2.0], [3.0, 4.0]])

    def test_scaling_recorded_in_metadata(self, tmp_path):
        path = write(tmp_path, "scale.csv", "0,255,0\n9,0,255\n")
        problem = load_dataset(path, scale=1 / 255)
        assert problem.metadata["scale"] == 1 / 255
        assert np.allclose(problem.features, [[1.0, 0.0], [0.0, 1.0]])

    def test_blank_lines_skipped(self, tmp_path):
        path = write(tmp_path, "blank.csv", "0,1,2\n\n7,3,4\n")
        problem = load_dataset(path)
        assert problem.n_components == 2


class TestSvmlight:
    def test_sparse_rows_materialized(self, tmp_path):
        path = write(tmp_path, "data.svm", "0 1:1.5 3:2.5\n8 2:-1.0\n")
        problem = load_dataset(path, format="svmlight")
        assert problem.dim == 3
        assert np.array_equal(problem.features, [[1.5, 0.0, 2.5], [0.0, -1.0, 0.0]])
        assert np.array_equal(problem.labels, [0.0, 1.0])

    def test_explicit_dimension(self, tmp_path):
        path = write(tmp_path, "data.svm", "0 1:1.0\n")
        problem = load_dataset(path, format="svmlight", n_features=5)
        assert problem.dim == 5

    def test_malformed_token_named(self, tmp_path):
        path = write(tmp_path, "data.svm", "0 1:1.0\n5 2:oops\n")
        with pytest.raises(DatasetError, match="row 2"):
            load_dataset(path, format="svmlight")

    def test_comments_and_blanks(self, tmp_path):
        path = write(tmp_path, "data.svm", "# header\n0 1:1.0\n\n9 1:2.0 # tail\n")
        problem = load_dataset(path, format="svmlight")
        assert problem.n_components == 2


def test_unknown_format(tmp_path):
    path = write(tmp_path, "x.bin", "whatever")
    with pytest.raises(DatasetError, match="unknown dataset format"):
        load_dataset(path, format="parquet")
