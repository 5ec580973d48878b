"""Checkpoint readers and the export pipeline.

The job here is plumbing: open a saved model, find every 2-D
floating-point weight tensor (dense/linear kernels), and write each one
as a float32 NPY file (format version 1.0, C order) plus a manifest.json
recording name, file, shape and layer kind.  Non-2-D and non-float
tensors are skipped with a log line; convolution kernels in particular
are skipped rather than reshaped.

Framework libraries (torch, h5py) are imported inside the readers so the
package stays importable, and usable for one framework, when only that
framework's library is installed.
"""

from __future__ import annotations

import fnmatch
import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

log = logging.getLogger("spectrad_exporter")

FRAMEWORKS = ("keras_h5", "torch_statedict")

_UNSAFE = re.compile(r"[^A-Za-z0-9._-]")


class ExportError(Exception):
    """Unreadable checkpoint, wrong container type, or unknown framework."""


@dataclass(frozen=True)
class ExportJob:
    """One checkpoint file to be exported into one output directory."""

    model_path: Path
    framework: str
    output_dir: Path
    include: str | None = None  # fnmatch pattern against layer names

    def __post_init__(self):
        object.__setattr__(self, "model_path", Path(self.model_path))
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        if self.framework not in FRAMEWORKS:
            raise ExportError(
                f"unknown framework {self.framework!r}, expected one of "
                f"{'/'.join(FRAMEWORKS)}"
            )


def _read_torch_statedict(path: Path) -> list[tuple[str, np.ndarray]]:
    """All 2-D float tensors of a torch state dict, as float32 arrays."""
    import torch

    try:
        state = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as exc:
        raise ExportError(f"{path}: cannot read torch state dict: {exc}") from exc
    if not isinstance(state, dict):
        raise ExportError(
            f"{path}: expected a state dict (name -> tensor mapping), got "
            f"{type(state).__name__}"
        )

    out = []
    for name, value in state.items():
        name = str(name)
        if not isinstance(value, torch.Tensor):
            log.info("skipping %s: not a tensor (%s)", name, type(value).__name__)
            continue
        if not value.is_floating_point():
            log.info("skipping %s: non-float dtype %s", name, value.dtype)
            continue
        if value.dim() != 2:
            log.info("skipping %s: %d-D tensor, shape %s", name, value.dim(),
                     tuple(value.shape))
            continue
        out.append((name, value.detach().to(torch.float32).cpu().numpy()))
    return out


def _read_keras_h5(path: Path) -> list[tuple[str, np.ndarray]]:
    """All 2-D float datasets of a Keras HDF5 checkpoint, as float32 arrays.

    Walks every dataset in the file instead of assuming one fixed group
    layout, so full-model saves, weights-only saves and TF1-style variable
    names (trailing ``:0``) all work the same way.
    """
    import h5py

    try:
        fh = h5py.File(path, "r")
    except Exception as exc:
        raise ExportError(f"{path}: cannot read HDF5 file: {exc}") from exc

    with fh:
        datasets = []

        def _visit(name, obj):
            if isinstance(obj, h5py.Dataset):
                datasets.append((name, obj))

        fh.visititems(_visit)

        out = []
        for name, ds in datasets:
            clean = name.removesuffix(":0").strip("/").replace("/", ".")
            if ds.dtype.kind != "f":
                log.info("skipping %s: non-float dtype %s", clean, ds.dtype)
                continue
            if ds.ndim != 2:
                log.info("skipping %s: %d-D dataset, shape %s", clean, ds.ndim,
                         tuple(ds.shape))
                continue
            out.append((clean, np.asarray(ds[()], dtype=np.float32)))
    return out


_READERS = {"torch_statedict": _read_torch_statedict,
            "keras_h5": _read_keras_h5}


def _unique(name: str, seen: set) -> str:
    out, k = name, 2
    while out in seen:
        out = f"{name}_{k}"
        k += 1
    seen.add(out)
    return out


def _file_for(name: str, taken: set) -> str:
    # distinct layer names can sanitize to the same file stem
    stem = _UNSAFE.sub("_", name) or "layer"
    cand, k = stem, 2
    while cand + ".npy" in taken:
        cand = f"{stem}_{k}"
        k += 1
    taken.add(cand + ".npy")
    return cand + ".npy"


def export(job: ExportJob) -> dict:
    """Run one export job and return the manifest that was written.

    Every 2-D float tensor becomes one float32 NPY file in
    ``job.output_dir`` and ``manifest.json`` lists the set in extraction
    order.  An ``include`` pattern drops non-matching layer names.  A
    checkpoint yielding zero matching tensors still writes a manifest
    (with an empty layer list) and logs a warning; an unreadable
    checkpoint raises :class:`ExportError` before anything is created.
    """
    pairs = _READERS[job.framework](job.model_path)

    job.output_dir.mkdir(parents=True, exist_ok=True)
    seen_names: set[str] = set()
    taken_files: set[str] = set()
    layers = []
    for raw_name, arr in pairs:
        if job.include is not None and not fnmatch.fnmatchcase(raw_name, job.include):
            log.debug("skipping %s: does not match include pattern %s",
                      raw_name, job.include)
            continue
        name = _unique(raw_name, seen_names)
        fname = _file_for(name, taken_files)
        out = np.ascontiguousarray(arr, dtype="<f4")
        with open(job.output_dir / fname, "wb") as fh:
            np.lib.format.write_array(fh, out, version=(1, 0), allow_pickle=False)
        layers.append({"name": name, "file": fname,
                       "shape": [int(out.shape[0]), int(out.shape[1])],
                       "layer_kind": "dense"})
        log.info("exported %s -> %s shape=%dx%d", name, fname,
                 out.shape[0], out.shape[1])

    if not layers:
        log.warning("no 2-D float tensors found in %s; manifest is empty",
                    job.model_path)

    manifest = {"version": "1", "layers": layers}
    with open(job.output_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return manifest
