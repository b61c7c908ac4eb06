"""Bridge from real CLIP-family checkpoints to the harness's file formats.

Encodes caption/scene manifests with actual checkpoints and writes
embedding stores (EMBS binary) plus CLS-attention records (JSONL). The
harness itself is not imported: the file formats are the contract.
"""

__version__ = "0.1.0"


class ExportError(Exception):
    """Checkpoint loading or inference failed in a way retries cannot fix."""
