"""Weight-matrix loading: NPY (format version 1.0) arrays and JSON manifests.

The NPY reader/writer here is deliberately self-contained rather than a call
to ``np.load``: the analyzer accepts files produced by other tools and must
reject malformed input with precise errors instead of whatever a general
loader happens to do (pickle fallback, silent Fortran-order handling, etc.).
Only little-endian float32/float64, C-order, 2-D arrays are accepted;
float32 payloads are widened to float64 after loading.
"""

from __future__ import annotations

import ast
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ArrayDataError, ArrayFormatError, ArrayShapeError, ManifestError

_MAGIC = b"\x93NUMPY"
_SUPPORTED_DESCRS = {"<f4": np.float32, "<f8": np.float64}


@dataclass(frozen=True)
class WeightMatrix:
    """A single 2-D weight matrix plus identifying metadata.

    ``array`` is always float64, C-contiguous and marked read-only, so every
    downstream stage can share it without defensive copies.  Matrices must
    be at least 2x2: anything smaller has no spectrum worth analyzing.
    """

    name: str
    array: np.ndarray = field(repr=False)
    layer_kind: str = "dense"

    def __post_init__(self):
        arr = np.asarray(self.array)
        if arr.ndim != 2:
            raise ArrayShapeError(
                f"weight matrix {self.name!r} must be 2-D, got shape {arr.shape}"
            )
        if arr.shape[0] < 2 or arr.shape[1] < 2:
            raise ArrayShapeError(
                f"weight matrix {self.name!r} needs at least 2 rows and 2 "
                f"columns, got shape {arr.shape}"
            )
        arr = np.ascontiguousarray(arr, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            raise ArrayDataError(f"weight matrix {self.name!r} contains NaN or Inf")
        arr.flags.writeable = False
        object.__setattr__(self, "array", arr)

    @property
    def rows(self) -> int:
        return self.array.shape[0]

    @property
    def cols(self) -> int:
        return self.array.shape[1]


def _read_exact(fh, n: int, what: str) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise ArrayFormatError(f"truncated NPY file: short read in {what}")
    return buf


def load_array(path: str | Path, name: str | None = None,
               layer_kind: str = "dense") -> WeightMatrix:
    """Parse a single NPY file into a :class:`WeightMatrix`.

    Raises :class:`ArrayFormatError` for anything that is not a well-formed
    version-1.0 file holding little-endian float32/float64 in C order,
    :class:`ArrayShapeError` for non-2-D payloads and
    :class:`ArrayDataError` for non-finite entries.
    """
    path = Path(path)
    with open(path, "rb") as fh:
        magic = _read_exact(fh, len(_MAGIC), "magic")
        if magic != _MAGIC:
            raise ArrayFormatError(f"{path}: bad magic bytes, not an NPY file")
        major, minor = _read_exact(fh, 2, "version")
        if (major, minor) != (1, 0):
            raise ArrayFormatError(
                f"{path}: unsupported NPY format version {major}.{minor}, need 1.0"
            )
        (hlen,) = struct.unpack("<H", _read_exact(fh, 2, "header length"))
        header = _read_exact(fh, hlen, "header").decode("latin1")
        try:
            meta = ast.literal_eval(header)
        except (ValueError, SyntaxError) as exc:
            raise ArrayFormatError(f"{path}: unparsable NPY header: {exc}") from exc
        if not isinstance(meta, dict) or set(meta) != {"descr", "fortran_order", "shape"}:
            raise ArrayFormatError(f"{path}: NPY header missing required keys")

        descr = meta["descr"]
        if descr not in _SUPPORTED_DESCRS:
            raise ArrayFormatError(
                f"{path}: unsupported dtype {descr!r}, need '<f4' or '<f8'"
            )
        if meta["fortran_order"] is not False:
            raise ArrayFormatError(f"{path}: Fortran-order arrays are not supported")
        shape = meta["shape"]
        if (not isinstance(shape, tuple)
                or not all(isinstance(d, int) and d >= 0 for d in shape)):
            raise ArrayFormatError(f"{path}: malformed shape {shape!r} in NPY header")
        if len(shape) != 2:
            raise ArrayShapeError(f"{path}: need a 2-D array, header says shape {shape}")

        dtype = np.dtype(_SUPPORTED_DESCRS[descr])
        count = shape[0] * shape[1]
        payload = fh.read(count * dtype.itemsize)
        if len(payload) != count * dtype.itemsize:
            raise ArrayFormatError(f"{path}: truncated NPY file: short read in data")
        if fh.read(1):
            raise ArrayFormatError(f"{path}: trailing bytes after array data")

    arr = np.frombuffer(payload, dtype=dtype).reshape(shape).astype(np.float64)
    return WeightMatrix(name=name if name is not None else path.stem,
                        array=arr, layer_kind=layer_kind)


def save_array(matrix, path: str | Path) -> None:
    """Write a matrix as NPY format version 1.0, float64, C order.

    Accepts a :class:`WeightMatrix` or a plain 2-D array.  Non-finite
    entries raise :class:`ArrayDataError` before anything is written, so a
    failed save never leaves a half-valid file behind.  ``load_array``
    returns the written data bit for bit.
    """
    if isinstance(matrix, WeightMatrix):
        arr = matrix.array
    else:
        arr = np.asarray(matrix, dtype=np.float64)
        if arr.ndim != 2:
            raise ArrayShapeError(f"can only save 2-D arrays, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ArrayDataError("array contains NaN or Inf")
    out = np.ascontiguousarray(arr, dtype="<f8")

    header = ("{'descr': '<f8', 'fortran_order': False, 'shape': (%d, %d), }"
              % (arr.shape[0], arr.shape[1]))
    prefix_len = len(_MAGIC) + 2 + 2  # magic + version + header-length field
    total = prefix_len + len(header) + 1
    pad = (64 - total % 64) % 64  # payload starts on a 64-byte boundary
    header = header + " " * pad + "\n"

    with open(Path(path), "wb") as fh:
        fh.write(_MAGIC)
        fh.write(bytes((1, 0)))
        fh.write(struct.pack("<H", len(header)))
        fh.write(header.encode("latin1"))
        fh.write(out.tobytes(order="C"))


@dataclass(frozen=True)
class ManifestEntry:
    """One layer line of a manifest: where the file is and what it claims."""

    name: str
    file: str
    shape: tuple[int, int]
    layer_kind: str


def read_manifest_entries(path: str | Path) -> list[ManifestEntry]:
    """Parse and structurally validate a manifest without touching files.

    The manifest format is ``{"version": "1", "layers": [{"name", "file",
    "shape": [rows, cols], "layer_kind"}, ...]}``.  Catches malformed JSON,
    wrong version, missing keys, malformed shapes and duplicate layer
    names; whether the referenced files exist is checked only at load time,
    so callers can degrade per layer.
    """
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: invalid JSON: {exc}") from exc

    if not isinstance(doc, dict) or doc.get("version") != "1":
        raise ManifestError(f"{path}: manifest version must be the string '1'")
    layers = doc.get("layers")
    if not isinstance(layers, list):
        raise ManifestError(f"{path}: manifest must carry a 'layers' list")

    seen: set[str] = set()
    out: list[ManifestEntry] = []
    for i, entry in enumerate(layers):
        if not isinstance(entry, dict):
            raise ManifestError(f"{path}: layer entry {i} is not an object")
        try:
            name = entry["name"]
            rel = entry["file"]
            shape = entry["shape"]
            kind = entry["layer_kind"]
        except KeyError as exc:
            raise ManifestError(f"{path}: layer entry {i} missing key {exc}") from exc
        if name in seen:
            raise ManifestError(f"{path}: duplicate layer name {name!r}")
        seen.add(name)
        if (not isinstance(shape, list) or len(shape) != 2
                or not all(isinstance(d, int) for d in shape)):
            raise ManifestError(f"{path}: layer {name!r} has malformed shape {shape!r}")
        out.append(ManifestEntry(name=name, file=rel,
                                 shape=(shape[0], shape[1]), layer_kind=kind))
    return out


def load_manifest_entry(manifest_path: str | Path,
                        entry: ManifestEntry) -> WeightMatrix:
    """Load one manifest entry, enforcing existence and shape agreement."""
    file_path = Path(manifest_path).parent / entry.file
    if not file_path.is_file():
        raise ManifestError(
            f"layer {entry.name!r} file not found: {file_path}"
        )
    wm = load_array(file_path, name=entry.name, layer_kind=entry.layer_kind)
    if (wm.rows, wm.cols) != entry.shape:
        raise ManifestError(
            f"layer {entry.name!r} shape {list(entry.shape)} does not match "
            f"array shape {[wm.rows, wm.cols]}"
        )
    return wm


def load_manifest(path: str | Path) -> list[WeightMatrix]:
    """Load every layer listed in a manifest.json, in manifest order.

    Strict variant: the first bad entry (missing file, shape disagreement)
    raises :class:`ManifestError`.  The analysis pipeline instead walks
    :func:`read_manifest_entries` itself so one broken layer cannot sink
    the rest.
    """
    path = Path(path)
    return [load_manifest_entry(path, e) for e in read_manifest_entries(path)]
