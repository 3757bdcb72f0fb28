"""Binomial split of convolution powers into a bounded part and a remainder.

A density p is written as (1-b)*rho1 + b*rho0, where rho0 is the
highest-level set of mass b (the peak region, split deterministically at
the boundary level) and rho1 is bounded.  Expanding p^(*n) binomially by
how many factors come from rho1, the terms with at least two bounded
factors form a bounded density carrying all but a geometrically small
mass eps_n = b^n + n(1-b)b^(n-1); after the affine normalization this
"smoothed" density is the object the local limit theorem and the
entropy-gap bounds act on.

The k >= 2 part is assembled in the Fourier domain as
p-hat^n - b^n rho0-hat^n - n(1-b)b^(n-1) rho1-hat rho0-hat^(n-1),
one FFT instead of n-1 term-by-term convolutions; the explicit sum is
kept as a test oracle.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import comb

from .config import DEFAULT_TOL
from .errors import ConfigError, NegativeLobeError, WrapAroundError
from .grid_density import (
    GridDensity,
    affine,
    cf_tail_integral,
    crop_to_window,
    distance,
    make_density,
    trap_weights,
)


@dataclass(frozen=True)
class BoundedSplit:
    """Mass-b split of a density into peak (rho0) and bounded rest (rho1).

    bound is the essential sup of the kept part (1-b)*rho1, i.e. the level
    the source density does not exceed off the peak region.
    """

    b: float
    bound: float
    regular: GridDensity  # rho1, the bounded part
    peak: GridDensity  # rho0, the mass-b remainder

    @property
    def grid(self) -> GridDensity:
        return self.regular


def split(p: GridDensity, b: float) -> BoundedSplit:
    """Split off the highest-level set of mass exactly b.

    Bins are claimed in decreasing density order (ties left to right); the
    last bin needed is divided fractionally so the peak carries mass b
    exactly.  This choice minimizes the bound on the remaining part and is
    deterministic.
    """
    if not (0.0 < b < 0.5):
        raise ConfigError(f"split mass b must lie in (0, 1/2), got {b}")
    v = p.values
    w = p.weights()
    masses = w * v
    order = np.lexsort((np.arange(p.n), -v))
    csum = np.cumsum(masses[order])
    k_cut = int(np.searchsorted(csum, b * (1.0 - 1e-13)))
    if k_cut >= p.n:
        raise ConfigError("split mass exceeds available grid mass")
    raw0 = np.zeros_like(v)
    full = order[:k_cut]
    raw0[full] = v[full]
    before = float(csum[k_cut - 1]) if k_cut > 0 else 0.0
    frac_bin = order[k_cut]
    theta = (b - before) / float(masses[frac_bin])
    raw0[frac_bin] = theta * v[frac_bin]
    raw1 = v - raw0

    bound = float(raw1.max())
    regular = make_density(p.x0, p.dx, raw1, tail_exponent=p.tail_exponent, mass_tol=p.mass_tol)
    peak = make_density(p.x0, p.dx, raw0, mass_tol=p.mass_tol)
    return BoundedSplit(b=b, bound=bound, regular=regular, peak=peak)


def small_part_mass(b: float, n: int) -> float:
    """Mass of the terms with at most one bounded factor:
    b^n + n(1-b)b^(n-1), strictly below n*b^(n-1) for n >= 2."""
    if not (0.0 < b < 0.5):
        raise ConfigError(f"b must lie in (0, 1/2), got {b}")
    if n < 1:
        raise ConfigError("n must be >= 1")
    return b**n + n * (1.0 - b) * b ** (n - 1)


@dataclass(frozen=True)
class SmoothedPair:
    """The bounded k>=2 part and the small remainder of an n-fold sum,
    both affinely normalized, plus the normalized sum itself."""

    n: int
    a_n: float
    b_n: float
    small_mass: float  # eps_n
    smoothed: GridDensity  # bounded part, unit mass
    residual: GridDensity  # k <= 1 part, unit mass
    normalized_sum: GridDensity  # density of the normalized n-fold sum
    sup_bound: float  # recorded bound: sup(smoothed) <= b_n * bound / (1 - b)


def _conv_parts(sp: BoundedSplit, n: int):
    """Raw (unnormalized) values of the k>=2 part, the k<=1 part, and the
    full power on the zero-padded convolution grid."""
    base = sp.regular
    N = base.n
    m = 1 << math.ceil(math.log2(n * (N - 1) + 1))
    r1 = np.fft.rfft(sp.regular.values, m)
    r0 = np.fft.rfft(sp.peak.values, m)
    rp = (1.0 - sp.b) * r1 + sp.b * r0
    dxp = base.dx ** (n - 1)
    piece0 = np.fft.irfft(r0**n, m) * dxp
    piece1 = np.fft.irfft(r1 * r0 ** (n - 1), m) * dxp
    total = np.fft.irfft(rp**n, m) * dxp
    coef0 = sp.b**n
    coef1 = n * (1.0 - sp.b) * sp.b ** (n - 1)
    smoothed_raw = total - coef0 * piece0 - coef1 * piece1
    residual_raw = coef0 * piece0 + coef1 * piece1
    return smoothed_raw, residual_raw, total, n * base.x0, base.dx, m


def _checked_clip(vals: np.ndarray, floor: float, what: str) -> np.ndarray:
    low = float(vals.min())
    if low < floor:
        raise NegativeLobeError(f"{what} has negative lobes down to {low}")
    return np.maximum(vals, 0.0)


def modified_density(
    sp: BoundedSplit,
    n: int,
    a_n: float,
    b_n: float,
    crop_half_width: float | None = None,
) -> SmoothedPair:
    """Build the smoothed/residual pair of the n-fold sum at normalization
    (a_n, b_n); optionally crop every output to the faithful window."""
    if n < 2:
        raise ConfigError("the binomial split needs n >= 2")
    smoothed_raw, residual_raw, total, x0c, dx, m = _conv_parts(sp, n)

    junk = total[n * (sp.regular.n - 1) + 1 :]
    if junk.size and float(np.max(np.abs(junk))) > DEFAULT_TOL.wrap_floor:
        raise WrapAroundError("padded convolution leaked beyond the n-fold support")

    smoothed_raw = _checked_clip(smoothed_raw, DEFAULT_TOL.modified_neg_floor, "k>=2 part")
    residual_raw = _checked_clip(residual_raw, DEFAULT_TOL.modified_neg_floor, "k<=1 part")
    total = _checked_clip(total, DEFAULT_TOL.neg_floor, "full power")

    eps = small_part_mass(sp.b, n)
    tail_e = sp.regular.tail_exponent

    def finish(raw, tail_exponent):
        g = make_density(x0c, dx, raw, tail_exponent=tail_exponent, mass_tol=sp.regular.mass_tol)
        g = affine(g, a_n, b_n)
        if crop_half_width is not None:
            g = crop_to_window(g, crop_half_width)
        return g

    smoothed = finish(smoothed_raw, tail_e)
    residual = finish(residual_raw, tail_e)
    normalized_sum = finish(total, tail_e)
    return SmoothedPair(
        n=n,
        a_n=a_n,
        b_n=b_n,
        small_mass=eps,
        smoothed=smoothed,
        residual=residual,
        normalized_sum=normalized_sum,
        sup_bound=b_n * sp.bound / (1.0 - sp.b),
    )


def binomial_smoothed_direct(sp: BoundedSplit, n: int) -> np.ndarray:
    """Oracle: the k>=2 part as the explicit binomial sum, term by term."""
    if n < 2:
        raise ConfigError("need n >= 2")
    N = sp.regular.n
    m = 1 << math.ceil(math.log2(n * (N - 1) + 1))
    r1 = np.fft.rfft(sp.regular.values, m)
    r0 = np.fft.rfft(sp.peak.values, m)
    dxp = sp.regular.dx ** (n - 1)
    acc = np.zeros(m)
    for k in range(2, n + 1):
        coef = float(comb(n, k, exact=True)) * (1.0 - sp.b) ** k * sp.b ** (n - k)
        acc += coef * np.fft.irfft(r1**k * r0 ** (n - k), m) * dxp
    return acc


# ---------------------------------------------------------------------------
# quantitative checks


@dataclass(frozen=True)
class BoundCheck:
    lhs: float
    rhs: float
    passed: bool

    def to_json(self):
        return {"lhs": self.lhs, "rhs": self.rhs, "pass": self.passed}


@dataclass(frozen=True)
class CheckReport:
    n: int
    b: float
    s: float
    t0: float
    l1_bound: BoundCheck
    cf_bound: BoundCheck
    weighted_l1: BoundCheck
    cf_tail_value: float
    cf_tail_fitted_c: float | None = None

    def to_json(self):
        return {
            "n": self.n,
            "b": self.b,
            "s": self.s,
            "t0": self.t0,
            "l1_bound": self.l1_bound.to_json(),
            "cf_bound": self.cf_bound.to_json(),
            "weighted_l1": self.weighted_l1.to_json(),
            "cf_tail": {"integral": self.cf_tail_value, "fitted_c": self.cf_tail_fitted_c},
        }


def _cf_sup_gap(p: GridDensity, q: GridDensity) -> float:
    """sup over the resolvable band of |p-hat - q-hat| for same-grid densities."""
    if not (p.x0 == q.x0 and p.dx == q.dx and p.n == q.n):
        raise ConfigError("cf gap needs a common grid")
    spec = np.fft.rfft(p.values - q.values) * p.dx
    return float(np.max(np.abs(spec)))


def decomposition_checks(sp: BoundedSplit, pair: SmoothedPair, s: float, t0: float) -> CheckReport:
    """Quantitative closeness of the smoothed density to the normalized sum:
    plain L1, sup of the characteristic-function gap, |x|^s-weighted L1
    (each against 2^-n), and the CF tail integral beyond t0*b_n.

    Failures are reported, not raised: the 2^-n bounds only hold for n
    large enough relative to b.
    """
    rhs = 2.0 ** (-pair.n)
    l1 = distance(pair.smoothed, pair.normalized_sum, "l1")
    cf_gap = _cf_sup_gap(pair.smoothed, pair.normalized_sum)
    wl1 = distance(pair.smoothed, pair.normalized_sum, "weighted_l1", s=s)
    tail = cf_tail_integral(pair.smoothed, t0 * pair.b_n)
    return CheckReport(
        n=pair.n,
        b=sp.b,
        s=s,
        t0=t0,
        l1_bound=BoundCheck(l1, rhs, l1 < rhs),
        cf_bound=BoundCheck(cf_gap, rhs, cf_gap < rhs),
        weighted_l1=BoundCheck(wl1, rhs, wl1 < rhs),
        cf_tail_value=tail,
    )


def fit_cf_tail_decay(entries: list[tuple[int, float, float]]) -> tuple[float, float, float]:
    """Fit integral_n ~ C * b_n * exp(-c*n) over (n, integral, b_n) rows.

    Returns (c, C, r_squared) of the linear regression of log(I_n / b_n)
    on n; decay means c > 0.
    """
    pts = [(n, i, bn) for (n, i, bn) in entries if i > 0.0]
    if len(pts) < 4:
        raise ConfigError("need at least 4 positive tail integrals to fit")
    ns = np.array([p[0] for p in pts], dtype=float)
    ys = np.log(np.array([p[1] / p[2] for p in pts]))
    slope, intercept = np.polyfit(ns, ys, 1)
    fitted = slope * ns + intercept
    ss_res = float(np.sum((ys - fitted) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else 1.0
    return -float(slope), float(math.exp(intercept)), r2
