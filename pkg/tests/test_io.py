from __future__ import annotations

import numpy as np
import pytest
from scipy import sparse

from rhetorica import io as rio


def _art():
    return rio.Artifact("thing", 2, {"b": [1, 2], "a": "x"}, {
        "dense": np.arange(6, dtype=np.float64).reshape(2, 3),
        "ints": np.array([3, -1], dtype=np.int64),
        "csr": sparse.csr_matrix(np.array([[0, 2], [1, 0]], dtype=np.int64)),
    })


def test_roundtrip(tmp_path):
    p = tmp_path / "a.bin"
    rio.save(p, _art())
    back = rio.load(p, "thing")
    assert back.schema == 2 and back.meta == {"a": "x", "b": [1, 2]}
    np.testing.assert_array_equal(back.arrays["dense"], _art().arrays["dense"])
    assert (back.arrays["csr"] != _art().arrays["csr"]).nnz == 0


def test_bytes_deterministic():
    assert rio.dumps(_art()) == rio.dumps(_art())


def test_kind_and_corruption_checks():
    data = rio.dumps(_art())
    with pytest.raises(rio.ArtifactError):
        rio.loads(data, "other")
    with pytest.raises(rio.ArtifactError):
        rio.loads(b"garbage" + data)
    with pytest.raises(rio.ArtifactError):
        rio.loads(data[:-5])


def test_csv_float_repr(tmp_path):
    p = tmp_path / "t.csv"
    rio.write_csv(p, ["a", "b"], [[1, 0.1 + 0.2], ["x", np.float64(1e-300)]])
    assert p.read_text() == "a,b\n1,0.30000000000000004\nx,1e-300\n"
    assert rio.read_csv(p)[0] == {"a": "1", "b": "0.30000000000000004"}


def test_jsonl_and_hashes(tmp_path):
    p = tmp_path / "r.jsonl"
    rio.write_jsonl(p, [{"b": 1, "a": "é"}])
    assert rio.read_jsonl(p) == [{"a": "é", "b": 1}]
    assert rio.sha256_json({"x": 1, "y": 2}) == rio.sha256_json({"y": 2, "x": 1})
    assert len(rio.sha256_file(p)) == 64
