"""Backend selection for the quadrature inner loop.

The compiled extension is preferred; a pure-numpy implementation with the
same contract is used when the extension is unavailable or when
``STABLE_ENTROPY_PURE_PYTHON`` is set (useful for benchmarking the two
paths against each other).
"""

import os

if os.environ.get("STABLE_ENTROPY_PURE_PYTHON"):
    from ._quad_py import inversion_sum

    BACKEND = "python"
else:
    try:
        from ._quad_cy import inversion_sum

        BACKEND = "cython"
    except ImportError:
        from ._quad_py import inversion_sum

        BACKEND = "python"

__all__ = ["inversion_sum", "BACKEND"]
