"""Checkpoint-to-NPY exporter for dense-layer weight matrices.

Opens saved deep-learning checkpoints (PyTorch state dicts, Keras HDF5
files), extracts every 2-D floating-point weight tensor, and writes each
one as a float32 NPY file next to a manifest.json listing the set.  The
output directory is a plain file-format hand-off; this package has no
dependency on the analysis tooling that consumes it.
"""

from .extract import FRAMEWORKS, ExportError, ExportJob, export

__all__ = ["FRAMEWORKS", "ExportError", "ExportJob", "export"]
__version__ = "0.1.0"
