"""Pure-numpy fallback for the Fourier-inversion inner loop.

Same contract as the compiled version: chunked outer products keep the
temporary phase matrix below ~32 MB regardless of problem size.
"""

import numpy as np

_CHUNK_ELEMS = 1 << 22


def inversion_sum(x, t, wre, wim):
    x = np.ascontiguousarray(x, dtype=np.float64)
    t = np.ascontiguousarray(t, dtype=np.float64)
    out = np.empty(x.shape[0])
    step = max(1, _CHUNK_ELEMS // max(t.shape[0], 1))
    for i0 in range(0, x.shape[0], step):
        ph = np.multiply.outer(x[i0 : i0 + step], t)
        out[i0 : i0 + step] = np.cos(ph) @ wre + np.sin(ph) @ wim
    return out
