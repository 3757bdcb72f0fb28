"""Numerical tolerances and runtime knobs.

Every tolerance that the library applies lives here so tests can tighten
or inspect them in one place.  The values are artifact decisions: the
mathematics is exact, the grid is not.
"""

import os
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # trapezoidal mass of a grid density must stay within unit mass by this
    mass_tol: float = 1e-6
    # default target accuracy of integral functionals on a grid
    quadrature_tol: float = 1e-6
    # Fourier round-trip values in (neg_floor, 0) are clipped to 0;
    # anything below neg_floor signals a resolution problem
    neg_floor: float = -1e-9
    # boundary values above this (relative to the expected tail) mean the
    # padded convolution wrapped around
    wrap_floor: float = 1e-9
    # negative lobes below this in the binomial-part inversion are an error
    modified_neg_floor: float = -1e-7
    # integrability exponent gamma for the converse finiteness criterion:
    # integral of psi**gamma is finite for every stable psi handled here
    converse_exponent: float = 0.9
    # node budget for the adaptive pointwise quadrature
    max_quad_nodes: int = 1 << 23


DEFAULT_TOL = Tolerances()

THREADS_ENV = "STABLE_ENTROPY_THREADS"


def thread_count(n_tasks: int) -> int:
    """Worker count for per-n parallel sections, capped by STABLE_ENTROPY_THREADS.

    Unset or 0 means auto (one worker per task up to the CPU count).
    """
    raw = os.environ.get(THREADS_ENV, "0")
    try:
        cap = int(raw)
    except ValueError:
        cap = 0
    auto = min(n_tasks, os.cpu_count() or 1)
    if cap <= 0:
        return max(1, auto)
    return max(1, min(cap, n_tasks))
