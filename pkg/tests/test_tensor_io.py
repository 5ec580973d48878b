"""NPY parsing/writing and manifest validation."""

import json
import struct

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from spectrad.errors import (ArrayDataError, ArrayFormatError,
                             ArrayShapeError, ManifestError)
from spectrad.tensor_io import (ManifestEntry, WeightMatrix, load_array,
                                load_manifest, load_manifest_entry,
                                read_manifest_entries, save_array)

MAGIC = b"\x93NUMPY"


def _raw_npy(descr="<f8", fortran=False, shape=(3, 2), payload=None,
             version=(1, 0), header_override=None):
    """Hand-built NPY bytes so malformed variants are easy to produce."""
    if header_override is None:
        header = "{'descr': %r, 'fortran_order': %s, 'shape': (%d, %d), }" % (
            descr, fortran, shape[0], shape[1])
    else:
        header = header_override
    header = header + " " * ((64 - (10 + len(header) + 1) % 64) % 64) + "\n"
    if payload is None:
        dt = {"<f4": np.float32, "<f8": np.float64}.get(descr, np.float64)
        payload = np.arange(shape[0] * shape[1], dtype=dt).tobytes()
    return (MAGIC + bytes(version) + struct.pack("<H", len(header))
            + header.encode("latin1") + payload)


class TestWeightMatrix:
    def test_coerces_to_readonly_float64(self):
        wm = WeightMatrix(name="w", array=np.ones((2, 3), dtype=np.float32))
        assert wm.array.dtype == np.float64
        assert not wm.array.flags.writeable
        assert (wm.rows, wm.cols) == (2, 3)

    @pytest.mark.parametrize("shape", [(1, 5), (5, 1), (2,), (2, 2, 2)])
    def test_rejects_degenerate_shapes(self, shape):
        with pytest.raises(ArrayShapeError):
            WeightMatrix(name="bad", array=np.ones(shape))

    def test_rejects_nonfinite(self):
        arr = np.ones((3, 3))
        arr[1, 1] = np.nan
        with pytest.raises(ArrayDataError):
            WeightMatrix(name="nan", array=arr)


class TestRoundTrip:
    def test_save_load_bitwise(self, tmp_path):
        rng = np.random.Generator(np.random.Philox(key=0))
        arr = rng.normal(size=(17, 5))
        path = tmp_path / "w.npy"
        save_array(arr, path)
        wm = load_array(path)
        assert_array_equal(wm.array, arr)
        assert wm.name == "w"

    def test_numpy_reads_our_files(self, tmp_path):
        # interop: the hand-rolled writer must satisfy np.load
        arr = np.arange(12, dtype=np.float64).reshape(4, 3)
        path = tmp_path / "x.npy"
        save_array(arr, path)
        assert_array_equal(np.load(path), arr)

    def test_we_read_numpy_files(self, tmp_path):
        arr = np.linspace(0.0, 1.0, 10).reshape(2, 5)
        path = tmp_path / "np.npy"
        np.save(path, arr)
        assert_array_equal(load_array(path).array, arr)

    def test_payload_64_byte_aligned(self, tmp_path):
        path = tmp_path / "a.npy"
        save_array(np.ones((2, 2)), path)
        blob = path.read_bytes()
        (hlen,) = struct.unpack("<H", blob[8:10])
        assert (10 + hlen) % 64 == 0

    def test_float32_widens(self, tmp_path):
        path = tmp_path / "f4.npy"
        path.write_bytes(_raw_npy(descr="<f4"))
        wm = load_array(path)
        assert wm.array.dtype == np.float64
        assert_array_equal(wm.array, np.arange(6.0).reshape(3, 2))

    def test_save_rejects_nan(self, tmp_path):
        arr = np.ones((3, 3))
        arr[0, 0] = np.inf
        with pytest.raises(ArrayDataError):
            save_array(arr, tmp_path / "bad.npy")
        assert not (tmp_path / "bad.npy").exists()


class TestMalformedFiles:
    @pytest.mark.parametrize("mutate, err", [
        (lambda b: b"NOPE" + b[4:], ArrayFormatError),          # magic
        (lambda b: b[:6] + bytes((2, 0)) + b[8:], ArrayFormatError),  # version
        (lambda b: b[:-8], ArrayFormatError),                   # truncated data
        (lambda b: b + b"\0", ArrayFormatError),                # trailing bytes
        (lambda b: b[:30], ArrayFormatError),                   # short header
    ])
    def test_structural_rejections(self, tmp_path, mutate, err):
        path = tmp_path / "m.npy"
        path.write_bytes(mutate(_raw_npy()))
        with pytest.raises(err):
            load_array(path)

    @pytest.mark.parametrize("kwargs, err", [
        (dict(descr=">f8"), ArrayFormatError),      # big endian
        (dict(descr="<i8"), ArrayFormatError),      # integer payload
        (dict(fortran=True), ArrayFormatError),
        (dict(header_override="{'descr': '<f8'}"), ArrayFormatError),
        (dict(header_override="not a dict at all"), ArrayFormatError),
    ])
    def test_header_rejections(self, tmp_path, kwargs, err):
        path = tmp_path / "h.npy"
        path.write_bytes(_raw_npy(**kwargs))
        with pytest.raises(err):
            load_array(path)

    def test_non_2d_header(self, tmp_path):
        path = tmp_path / "d1.npy"
        header = "{'descr': '<f8', 'fortran_order': False, 'shape': (6,), }"
        payload = np.arange(6, dtype=np.float64).tobytes()
        path.write_bytes(_raw_npy(header_override=header, payload=payload))
        with pytest.raises(ArrayShapeError):
            load_array(path)

    def test_nan_payload(self, tmp_path):
        bad = np.full((3, 2), np.nan)
        path = tmp_path / "nan.npy"
        path.write_bytes(_raw_npy(payload=bad.tobytes()))
        with pytest.raises(ArrayDataError):
            load_array(path)


def _write_manifest(tmp_path, layers, version="1"):
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps({"version": version, "layers": layers}))
    return path


class TestManifest:
    def test_parse_and_load(self, tmp_path):
        a = np.arange(6.0).reshape(3, 2)
        save_array(a, tmp_path / "a.npy")
        path = _write_manifest(tmp_path, [
            {"name": "fc", "file": "a.npy", "shape": [3, 2],
             "layer_kind": "dense"},
        ])
        entries = read_manifest_entries(path)
        assert entries == [ManifestEntry(name="fc", file="a.npy",
                                         shape=(3, 2), layer_kind="dense")]
        wm = load_manifest_entry(path, entries[0])
        assert_array_equal(wm.array, a)
        assert load_manifest(path)[0].name == "fc"

    def test_parse_does_not_touch_files(self, tmp_path):
        path = _write_manifest(tmp_path, [
            {"name": "ghost", "file": "nowhere.npy", "shape": [4, 4],
             "layer_kind": "dense"},
        ])
        entries = read_manifest_entries(path)  # must not raise
        with pytest.raises(ManifestError, match="not found"):
            load_manifest_entry(path, entries[0])

    def test_shape_disagreement(self, tmp_path):
        save_array(np.ones((3, 2)), tmp_path / "a.npy")
        path = _write_manifest(tmp_path, [
            {"name": "fc", "file": "a.npy", "shape": [9, 9],
             "layer_kind": "dense"},
        ])
        with pytest.raises(ManifestError, match="does not match"):
            load_manifest(path)

    @pytest.mark.parametrize("doc", [
        "not json {",
        json.dumps({"version": "2", "layers": []}),
        json.dumps({"version": 1, "layers": []}),   # int version
        json.dumps({"version": "1"}),               # no layers
        json.dumps({"version": "1", "layers": [{"name": "x"}]}),
        json.dumps({"version": "1", "layers": [
            {"name": "x", "file": "a", "shape": [2], "layer_kind": "dense"}]}),
        json.dumps({"version": "1", "layers": [
            {"name": "x", "file": "a", "shape": [2, 2], "layer_kind": "d"},
            {"name": "x", "file": "b", "shape": [2, 2], "layer_kind": "d"}]}),
    ])
    def test_structural_rejections(self, tmp_path, doc):
        path = tmp_path / "manifest.json"
        path.write_text(doc)
        with pytest.raises(ManifestError):
            read_manifest_entries(path)
