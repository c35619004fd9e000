"""
Unit tests for random streams and artifact I/O
"""

import json
from pathlib import Path

import numpy as np
import pytest

from utils.io import read_json, read_matrix, write_json, write_matrix
from utils.rng import STREAM_IMPUTE, STREAM_MASK, derive_rng


@pytest.mark.unit
class TestDeriveRng:
    """Test reproducible independent streams"""

    def test_same_keys_same_stream(self):
        """Test identical seed and keys reproduce the draws"""
        a = derive_rng(7, STREAM_MASK).standard_normal(5)
        b = derive_rng(7, STREAM_MASK).standard_normal(5)
        np.testing.assert_array_equal(a, b)

    def test_keys_separate_streams(self):
        """Test stages and grid configurations draw different numbers"""
        base = derive_rng(7, STREAM_MASK).standard_normal(5)
        assert not np.allclose(base, derive_rng(7, STREAM_IMPUTE).standard_normal(5))
        assert not np.allclose(derive_rng(7, 0, 0).random(5), derive_rng(7, 0, 1).random(5))
        assert not np.allclose(base, derive_rng(8, STREAM_MASK).standard_normal(5))


@pytest.mark.unit
class TestArtifactIO:
    """Test JSON and matrix files"""

    def test_json_converts_numpy(self, tmp_path: Path):
        """Test numpy values are written as plain JSON with sorted keys"""
        path = write_json(
            tmp_path / "out" / "report.json", {"b": np.float64(0.5), "a": np.arange(3)}
        )
        assert read_json(path) == {"a": [0, 1, 2], "b": 0.5}
        assert list(json.loads(path.read_text())) == ["a", "b"]

    def test_matrix_keeps_missing_entries(self, tmp_path: Path):
        """Test NaN survives a write and read with its header"""
        matrix = np.array([[1.0, np.nan], [3.0, 4.0]])
        path = write_matrix(tmp_path / "X.csv", matrix, ["x1", "x2"])
        values, columns = read_matrix(path)
        assert columns == ["x1", "x2"]
        np.testing.assert_array_equal(values, matrix)
