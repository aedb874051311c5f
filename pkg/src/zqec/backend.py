"""Kernel backend selection.

Imports the compiled extension when available, otherwise the numpy fallback.
Set ``ZQEC_PURE_PYTHON=1`` to force the fallback (used by tests and the
benchmark to compare both paths).
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("ZQEC_PURE_PYTHON") == "1":
    _impl = _kernels_py
else:
    try:
        from . import _bitkernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py

popcount_words = _impl.popcount_words
matvec_parity = _impl.matvec_parity
matmat_mul = _impl.matmat_mul
rank_words = _impl.rank_words
seq_flip_reduce = _impl.seq_flip_reduce


def active_backend() -> str:
    """Name of the kernel implementation in use: 'compiled' or 'python'."""
    return "compiled" if _impl.COMPILED else "python"
