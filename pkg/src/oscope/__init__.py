"""Bias probes for vision-language joint-embedding models.

Measures positional bias of text encoders and size bias of image encoders
through retrieval probes, linear classification probes, image-text matching
scenarios, dataset statistics, and a Monte Carlo check of the contrastive
objective's e/(e+b) limit. Embeddings arrive through a bit-exact store
format, so any real or mock encoder can plug in.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND as KERNEL_BACKEND  # noqa: F401
