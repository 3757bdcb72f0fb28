"""Finiteness criteria and identities for entropy against a stable reference.

For a density p and non-extremal reference psi, finiteness of the relative
entropy comes down to (a) absolute continuity - automatic here since
non-extremal densities are positive everywhere - (b) a finite
E log+(1/psi(X)), and (c) finite differential entropy.  Against a normal
reference (b) is a second-moment condition; against a power-tailed one it
is the logarithmic moment E log(1+|X|).  The identity
D = -h + E log(1/psi) ties the three functionals together and is used as
a consistency gauge throughout.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigError, DivergentMomentError
from .grid_density import (
    GridDensity,
    _effective,
    _log_ref_values,
    _tail_cross,
    abs_moment,
    convolve_power,
    cross_entropy,
    entropy,
    log1p_abs_moment,
    relative_entropy,
)
from .sources import NormalizerSequence
from .stable_law import StableClass, StableLogDensity, StableParams, classify

EDGE_MASS_TOL = 1e-3


class Verdict(Enum):
    FINITE = "finite"
    INFINITE = "infinite"
    UNDETERMINED = "undetermined"


def _json_num(x: float):
    if math.isinf(x):
        return "+inf" if x > 0 else "-inf"
    return x


@dataclass(frozen=True)
class FinitenessReport:
    abs_continuity_ok: bool
    log_plus_moment: float
    entropy_value: float
    second_moment: float | None
    log_moment: float
    verdict: Verdict

    def to_json(self):
        return {
            "abs_continuity_ok": self.abs_continuity_ok,
            "log_plus_moment": _json_num(self.log_plus_moment),
            "entropy_value": _json_num(self.entropy_value),
            "second_moment": None if self.second_moment is None else _json_num(self.second_moment),
            "log_moment": _json_num(self.log_moment),
            "verdict": self.verdict.value,
        }


def _require_non_extremal(params: StableParams) -> StableClass:
    kind = classify(params)
    if kind is StableClass.EXTREMAL:
        raise ConfigError("criteria are stated for non-extremal references only")
    return kind


def _edge_converged(p: GridDensity) -> bool:
    """Window-convergence gauge for densities without a tail model: the
    outer tenth of the grid must carry almost no mass.  (Widening the grid
    would only append zeros exactly when this holds.)"""
    k = max(1, p.n // 20)
    w = p.weights()
    edge = float(w[:k] @ p.values[:k] + w[-k:] @ p.values[-k:])
    return edge < EDGE_MASS_TOL


def log_plus_reference_moment(p: GridDensity, params: StableParams) -> float:
    """E log+(1/psi(X)) under p, with the tail continuation; +inf when the
    continuation diverges (power tail against a normal reference)."""
    _require_non_extremal(params)
    ref = StableLogDensity(params)
    log_ref = _log_ref_values(p, ref)
    v, model = _effective(p)
    core = float(np.dot(p.weights() * v, np.maximum(0.0, -log_ref)))
    if model is not None:
        corr = _tail_cross(model, ref.tail)  # -log psi > 0 in the far tails
        if math.isinf(corr):
            return math.inf
        core += max(0.0, corr)
    return core


def entropy_upper_bound_check(
    p: GridDensity, params: StableParams
) -> tuple[float, float, bool]:
    """h(p) against its reference bound E log(1/psi); the gap is the
    relative entropy, so the bound holds whenever everything is finite."""
    _require_non_extremal(params)
    ref = StableLogDensity(params)
    h = entropy(p)
    bound = cross_entropy(p, ref)
    return h, bound, h <= bound + 1e-6


def entropy_identity_residual(p: GridDensity, params: StableParams) -> float:
    """D + h - E log(1/psi); zero in exact arithmetic, so the value gauges
    the internal consistency of the three independently accumulated
    integrals."""
    _require_non_extremal(params)
    ref = StableLogDensity(params)
    d = relative_entropy(p, ref)
    h = entropy(p)
    bound = cross_entropy(p, ref)
    if math.isinf(d) or math.isinf(bound):
        raise ConfigError("identity residual needs a finite divergence")
    return d + h - bound


def finiteness_diagnosis(p: GridDensity, params: StableParams) -> FinitenessReport:
    """Classify D(p || psi) as finite/infinite from moment and entropy gauges.

    Normal reference: finite second moment and finite entropy.  Power-tailed
    non-extremal reference: finite log moment and finite entropy.  Without a
    tail model the window must have visibly converged, otherwise the verdict
    is undetermined.
    """
    kind = _require_non_extremal(params)
    converged = p.tail is not None or _edge_converged(p)

    h = entropy(p)
    log_plus = log_plus_reference_moment(p, params)
    log_mom = log1p_abs_moment(p)

    second: float | None = None
    if kind is StableClass.NORMAL:
        try:
            second = abs_moment(p, 2.0)
        except DivergentMomentError:
            second = math.inf

    if kind is StableClass.NORMAL:
        conditions_finite = math.isfinite(second) and math.isfinite(h)
    else:
        conditions_finite = math.isfinite(log_mom) and math.isfinite(h)

    if not conditions_finite or math.isinf(log_plus):
        verdict = Verdict.INFINITE
    elif not converged:
        verdict = Verdict.UNDETERMINED
    else:
        verdict = Verdict.FINITE
    return FinitenessReport(
        abs_continuity_ok=True,
        log_plus_moment=log_plus,
        entropy_value=h,
        second_moment=second,
        log_moment=log_mom,
        verdict=verdict,
    )


@dataclass(frozen=True)
class MonotonicityReport:
    ns: tuple[int, ...]
    sum_entropies: tuple[float, ...]
    verdicts: tuple[Verdict, ...]
    entropy_nondecreasing: bool
    stays_finite: bool

    @property
    def ok(self) -> bool:
        return self.entropy_nondecreasing and self.stays_finite


def monotonicity_check(
    source: GridDensity,
    params: StableParams,
    n0: int,
    n_max: int,
    norm: NormalizerSequence | None = None,
    slack: float = 1e-4,
) -> MonotonicityReport:
    """Entropy of the raw sums never drops: h(S_n) >= h(S_n0) - slack for
    n0 <= n <= n_max, and the finiteness verdict of the normalized sums
    stays finite once it is finite at n0."""
    if not 1 <= n0 <= n_max:
        raise ConfigError("need 1 <= n0 <= n_max")
    if norm is None:
        norm = NormalizerSequence(params.alpha, 1.0, "zero")
    from .convergence_lab import zn_density

    ns, h_vals, verdicts = [], [], []
    for n in range(n0, n_max + 1):
        conv = convolve_power(source, n)
        h_vals.append(entropy(conv))
        verdicts.append(finiteness_diagnosis(zn_density(source, n, norm), params).verdict)
        ns.append(n)
    base = h_vals[0]
    nondec = all(h >= base - slack for h in h_vals) and all(
        h_vals[i + 1] >= h_vals[i] - slack for i in range(len(h_vals) - 1)
    )
    finite = verdicts[0] is Verdict.FINITE and all(v is Verdict.FINITE for v in verdicts)
    return MonotonicityReport(
        ns=tuple(ns),
        sum_entropies=tuple(h_vals),
        verdicts=tuple(verdicts),
        entropy_nondecreasing=nondec,
        stays_finite=finite,
    )
