"""gpboard: boardgame reduction and tree expansion of Duhamel terms.

Modules: ``boardgame`` (collapse maps and echelon classes), ``trees``
(contraction forests), ``kernels`` (symbolic Theta kernels), ``ledger``
(bound bookkeeping), ``numerics`` (spectral checks) and ``harness`` (the
check suite behind ``gpboard suite``).
"""

from __future__ import annotations

from importlib import metadata as _metadata

__all__ = ["__version__"]

# keep equal to [project].version in pyproject.toml
_SOURCE_VERSION = "0.1.0"

try:  # pragma: no cover - installed path checked by the version CLI test
    __version__ = _metadata.version("gpboard")
except _metadata.PackageNotFoundError:  # pragma: no cover - running from a source tree
    __version__ = _SOURCE_VERSION
