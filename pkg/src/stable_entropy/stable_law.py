"""Stable laws: parametrization, characteristic function, densities, sampling.

A law is identified by (alpha, beta, c, a) through its characteristic
function

    f(t) = exp{ i*a*t - c*|t|^alpha * (1 + i*beta*sign(t)*omega(t, alpha)) }

with omega(t, alpha) = tan(pi*alpha/2) for alpha != 1 and
omega(t, 1) = (2/pi)*log|t|.  No continuity across alpha = 1 is attempted;
the parametrization is fixed as written, and quantities for alpha = 1 with
beta != 0 go through a slower, denser quadrature path.

Densities are computed two independent ways: pointwise adaptive
trapezoidal inversion of the characteristic function (the oracle-grade
path, compiled kernel underneath), and a single-FFT inversion on a uniform
grid (the fast path for large grids).  Tests hold the two against each
other.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import gamma as gamma_fn
from scipy.special import gammainccinv

from . import _kernels
from .config import DEFAULT_TOL
from .errors import ConfigError, ExtrapolationError, QuadratureError


@dataclass(frozen=True)
class StableParams:
    """Parameter quadruple of a stable law.

    alpha: stability index in (0, 2]; beta: skewness in [-1, 1];
    c: scale coefficient of |t|^alpha, positive; a: location.
    For alpha = 2 the skewness term vanishes identically, so beta is
    stored as 0.
    """

    alpha: float
    beta: float
    c: float
    a: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.alpha <= 2.0):
            raise ConfigError(f"alpha must be in (0, 2], got {self.alpha}")
        if not (-1.0 <= self.beta <= 1.0):
            raise ConfigError(f"beta must be in [-1, 1], got {self.beta}")
        if not (self.c > 0.0 and math.isfinite(self.c)):
            raise ConfigError(f"c must be positive, got {self.c}")
        if not math.isfinite(self.a):
            raise ConfigError(f"a must be finite, got {self.a}")
        if self.alpha == 2.0 and self.beta != 0.0:
            object.__setattr__(self, "beta", 0.0)

    @property
    def scale_length(self) -> float:
        return self.c ** (1.0 / self.alpha)


class StableClass(Enum):
    NORMAL = "normal"
    NON_EXTREMAL = "non_extremal"
    EXTREMAL = "extremal"


def classify(params: StableParams) -> StableClass:
    """Normal iff alpha = 2; extremal iff alpha < 2 and |beta| = 1."""
    if params.alpha == 2.0:
        return StableClass.NORMAL
    if abs(params.beta) == 1.0:
        return StableClass.EXTREMAL
    return StableClass.NON_EXTREMAL


def cf(params: StableParams, t):
    """Characteristic function at t (scalar or array)."""
    t_arr = np.asarray(t, dtype=float)
    scalar = t_arr.ndim == 0
    t_arr = np.atleast_1d(t_arr)
    at = np.abs(t_arr) ** params.alpha
    if params.alpha == 1.0:
        with np.errstate(divide="ignore", invalid="ignore"):
            w = (2.0 / np.pi) * np.log(np.abs(t_arr))
            skew = np.where(t_arr == 0.0, 0.0, at * w)  # |t|^a * omega -> 0 at t=0
    else:
        skew = at * math.tan(math.pi * params.alpha / 2.0)
    expo = (
        1j * params.a * t_arr
        - params.c * at
        - 1j * params.c * params.beta * np.sign(t_arr) * skew
    )
    out = np.exp(expo)
    return complex(out[0]) if scalar else out


def _cf_centered_halfline(params: StableParams, t: np.ndarray) -> np.ndarray:
    """cf with the location stripped, on t >= 0."""
    at = t**params.alpha
    if params.beta == 0.0:
        return np.exp(-params.c * at) + 0j
    if params.alpha == 1.0:
        with np.errstate(divide="ignore", invalid="ignore"):
            skew = np.where(t == 0.0, 0.0, (2.0 / np.pi) * t * np.log(t))
    else:
        skew = at * math.tan(math.pi * params.alpha / 2.0)
    return np.exp(-params.c * at - 1j * params.c * params.beta * skew)


def _truncation_radius(params: StableParams, tol: float) -> float:
    """Smallest T with (1/pi) * int_T^inf exp(-c t^alpha) dt <= tol / 2.

    The remaining tail equals Gamma(1/alpha)*Q(1/alpha, c T^alpha) /
    (alpha c^(1/alpha)) with Q the regularized upper incomplete gamma,
    inverted in closed form.
    """
    a_inv = 1.0 / params.alpha
    full = gamma_fn(a_inv) / (params.alpha * params.c**a_inv)
    target = 0.5 * tol * math.pi / full
    if target >= 1.0:
        return params.scale_length
    z = float(gammainccinv(a_inv, target))
    return max((z / params.c) ** a_inv, params.scale_length)


def _phase_budget(params: StableParams, T: float, xm: float) -> float:
    if params.beta == 0.0:
        skew = 0.0
    elif params.alpha == 1.0:
        skew = (2.0 * params.c / math.pi) * T * (abs(math.log(T)) + 1.0)
    else:
        skew = params.c * abs(params.beta * math.tan(math.pi * params.alpha / 2.0)) * T**params.alpha
    return T * xm + skew


def _inversion_chunk(params, u_nodes, m, x, h, half_ends):
    """Weighted kernel pass over one set of substitution nodes u (t = u^m)."""
    t = u_nodes**m
    jac = float(m) * u_nodes ** (m - 1) if m > 1 else np.ones_like(u_nodes)
    g = (h / math.pi) * jac * _cf_centered_halfline(params, t)
    if half_ends:
        g[0] *= 0.5
        g[-1] *= 0.5
    return _kernels.inversion_sum(
        np.ascontiguousarray(x),
        np.ascontiguousarray(t),
        np.ascontiguousarray(g.real),
        np.ascontiguousarray(g.imag),
    )


def pdf(params: StableParams, x, tol: float = 1e-10):
    """Density by adaptive trapezoidal inversion, truncation + rule error < tol.

    The half-line integral is regularized by t = u^m with m = ceil(2/alpha),
    which removes the endpoint derivative singularity for alpha < 2; the
    trapezoidal grid in u is then refined by midpoint doubling until the
    result moves by less than tol/2.  alpha = 1 with beta != 0 rides the
    same loop but needs far more nodes (log-oscillatory phase); exhausting
    the node budget raises QuadratureError.
    """
    if tol <= 0.0:
        raise ConfigError("tol must be positive")
    xs = np.asarray(x, dtype=float)
    scalar = xs.ndim == 0
    xs = np.atleast_1d(xs).astype(float)
    if xs.size == 0:
        return xs.copy()
    u = xs - params.a
    T = _truncation_radius(params, tol)
    m = max(1, math.ceil(2.0 / params.alpha))
    u_max = T ** (1.0 / m)
    xm = float(np.max(np.abs(u)))
    n = int(max(2048, min(4.0 * _phase_budget(params, T, xm), 1 << 17)))
    n = 1 << max(1, math.ceil(math.log2(n)))

    h = u_max / n
    nodes = np.linspace(0.0, u_max, n + 1)
    vals = _inversion_chunk(params, nodes, m, u, h, half_ends=True)
    used = n + 1
    extrap = None
    while True:
        mid = (np.arange(n) + 0.5) * h
        new_vals = 0.5 * vals + _inversion_chunk(params, mid, m, u, 0.5 * h, half_ends=False)
        used += n
        n *= 2
        h *= 0.5
        # one Romberg level: the substitution leaves a smooth h^2 endpoint
        # term that would otherwise dominate the refinement budget
        new_extrap = new_vals + (new_vals - vals) / 3.0
        vals = new_vals
        if extrap is not None:
            delta = float(np.max(np.abs(new_extrap - extrap)))
            extrap = new_extrap
            if delta <= 0.5 * tol:
                break
        else:
            extrap = new_extrap
        if used > DEFAULT_TOL.max_quad_nodes:
            raise QuadratureError(
                f"inversion quadrature did not reach tol={tol} within "
                f"{used} nodes (alpha={params.alpha}, beta={params.beta})"
            )
    return float(extrap[0]) if scalar else extrap


def grid_pdf(params: StableParams, x0: float, dx: float, n: int) -> np.ndarray:
    """Density sampled on the uniform grid x0 + j*dx, j < n, via one FFT.

    Spectrally accurate up to periodization: the result is the true density
    wrapped with period n*dx, so the window must dwarf the tail reach.
    """
    if n <= 0 or dx <= 0.0:
        raise ConfigError("grid_pdf needs n > 0 and dx > 0")
    t = 2.0 * math.pi * np.fft.fftfreq(n, d=dx)
    g = cf(params, t) * np.exp(-1j * t * x0)
    vals = np.fft.fft(g).real / (n * dx)
    return vals


# ---------------------------------------------------------------------------
# tail asymptotics, crossover, cached per-params machinery


def symmetric_tail_amplitude(alpha: float, c: float) -> float:
    """Coefficient k with psi(x) ~ k*|x|^-(1+alpha) for the symmetric law."""
    if not (0.0 < alpha < 2.0):
        raise ConfigError("tail amplitude defined for alpha in (0, 2)")
    return c * gamma_fn(1.0 + alpha) * math.sin(math.pi * alpha / 2.0) / math.pi


def _aitken(seq):
    out = []
    for k in range(len(seq) - 2):
        d1 = seq[k + 1] - seq[k]
        d2 = seq[k + 2] - seq[k + 1]
        den = d2 - d1
        if den == 0.0:
            out.append(seq[k + 2])
        else:
            out.append(seq[k + 2] - d2 * d2 / den)
    return out


def tail_constants(params: StableParams) -> tuple[float, float]:
    """Limits of psi(x)*|x|^(1+alpha) as x -> -inf / +inf.

    Estimated by Aitken extrapolation of the scaled density over a geometric
    ladder of evaluation points; the ladder is pushed further out once if
    the extrapolants have not stabilized to three significant digits.
    """
    if classify(params) is StableClass.EXTREMAL:
        raise ConfigError("tail constants need a two-sided power tail (non-extremal)")
    if params.alpha >= 2.0:
        raise ConfigError("the normal law has no power tail")
    expo = 1.0 + params.alpha
    start = 32.0 * params.scale_length

    def one_side(sign: float, L: float) -> float:
        us = L * 2.0 ** np.arange(5)
        rough = pdf(params, params.a + sign * us, tol=1e-9)
        fine_tol = max(1e-15, 1e-6 * float(np.min(np.abs(rough))))
        vals = pdf(params, params.a + sign * us, tol=fine_tol)
        g = vals * us**expo
        acc = _aitken(list(g))
        mid = float(np.median(acc))
        if mid <= 0.0 or (max(acc) - min(acc)) > 5e-4 * abs(mid):
            raise ExtrapolationError("tail constant failed to stabilize")
        return mid

    for L in (start, 4.0 * start):
        try:
            c1 = one_side(+1.0, L)
            c0 = c1 if params.beta == 0.0 else one_side(-1.0, L)
            return c0, c1
        except ExtrapolationError:
            if L != start:
                raise
    raise ExtrapolationError("unreachable")  # pragma: no cover


@dataclass(frozen=True)
class PowerTail:
    """Reference-density tail log psi(x) ~ log_amp - exponent*log|x - center|."""

    exponent: float
    log_amp_left: float
    log_amp_right: float
    center: float


@dataclass(frozen=True)
class GaussianTail:
    mean: float
    var: float


class _LawCache:
    """Lazily computed per-params quantities: tail constants, crossover,
    and a spline of the log-density over the core region."""

    def __init__(self, params: StableParams):
        self.params = params
        self._tails = None
        self._cross = None
        self._spline = None

    def tails(self):
        if self._tails is None:
            self._tails = tail_constants(self.params)
        return self._tails

    def _asym_log(self, u):
        c0, c1 = self.tails()
        expo = 1.0 + self.params.alpha
        amp = np.where(np.asarray(u) < 0.0, math.log(c0), math.log(c1))
        return amp - expo * np.log(np.abs(u))

    def crossover(self):
        """Per side, the smallest dyadic |x - a| where the asymptotic and the
        quadrature log-density agree within 1e-3."""
        if self._cross is None:
            p = self.params
            found = []
            for sign in (-1.0, 1.0):
                u0 = 2.0 * p.scale_length
                cross = None
                for k in range(40):
                    uu = u0 * 2.0**k
                    val = pdf(p, p.a + sign * uu, tol=1e-13)
                    if val <= 0.0:
                        continue
                    if abs(math.log(val) - float(self._asym_log(sign * uu))) < 1e-3:
                        cross = uu
                        break
                if cross is None:
                    raise ExtrapolationError("no crossover found for log-density branches")
                found.append(cross)
            self._cross = tuple(found)  # (left, right), both positive
        return self._cross

    def core_log_spline(self):
        if self._spline is None:
            left, right = self.crossover()
            lo, hi = -1.05 * left, 1.05 * right
            us = np.linspace(lo, hi, 8193)
            vals = pdf(self.params, self.params.a + us, tol=1e-13)
            vals = np.maximum(vals, 1e-300)
            self._spline = CubicSpline(us, np.log(vals))
        return self._spline


_CACHES: dict[StableParams, _LawCache] = {}


def _cache(params: StableParams) -> _LawCache:
    cache = _CACHES.get(params)
    if cache is None:
        cache = _CACHES.setdefault(params, _LawCache(params))
    return cache


def log_pdf(params: StableParams, x):
    """log psi(x); exact for the normal and Cauchy members, otherwise
    quadrature-backed in the core and the fitted power asymptotic beyond
    the cached crossover.  Rejects extremal laws."""
    kind = classify(params)
    if kind is StableClass.EXTREMAL:
        raise ConfigError("log_pdf does not cover extremal laws")
    xs = np.asarray(x, dtype=float)
    scalar = xs.ndim == 0
    u = np.atleast_1d(xs) - params.a
    if kind is StableClass.NORMAL:
        out = -(u * u) / (4.0 * params.c) - 0.5 * math.log(4.0 * math.pi * params.c)
    elif params.alpha == 1.0 and params.beta == 0.0:
        out = math.log(params.c / math.pi) - np.log(params.c**2 + u * u)
    else:
        cache = _cache(params)
        left, right = cache.crossover()
        core = (u > -left) & (u < right)
        out = np.empty_like(u)
        if np.any(core):
            out[core] = cache.core_log_spline()(u[core])
        if np.any(~core):
            out[~core] = cache._asym_log(u[~core])
    return float(out[0]) if scalar else out


def log_pdf_on_grid(params: StableParams, x0: float, dx: float, n: int) -> np.ndarray:
    """log psi on a uniform grid: closed forms where available, otherwise
    FFT inversion over the core and the power asymptotic beyond it.

    Intended for wide grids (span much larger than the crossover), where
    the FFT periodization error is negligible relative to the core values.
    """
    kind = classify(params)
    if kind is StableClass.NORMAL or (params.alpha == 1.0 and params.beta == 0.0):
        return log_pdf(params, x0 + dx * np.arange(n))
    if kind is StableClass.EXTREMAL:
        raise ConfigError("log_pdf_on_grid does not cover extremal laws")
    cache = _cache(params)
    left, right = cache.crossover()
    x = x0 + dx * np.arange(n)
    u = x - params.a
    core = (u > -left) & (u < right)
    out = np.empty(n)
    out[~core] = cache._asym_log(u[~core])
    if np.any(core):
        vals = grid_pdf(params, x0, dx, n)[core]
        out[core] = np.log(np.maximum(vals, 1e-300))
    return out


def reference_tail(params: StableParams):
    """Tail descriptor of a non-extremal law, for integral tail corrections."""
    kind = classify(params)
    if kind is StableClass.NORMAL:
        return GaussianTail(mean=params.a, var=2.0 * params.c)
    if kind is StableClass.EXTREMAL:
        raise ConfigError("extremal laws have no two-sided tail descriptor")
    if params.alpha == 1.0 and params.beta == 0.0:
        amp = params.c / math.pi
        return PowerTail(2.0, math.log(amp), math.log(amp), params.a)
    c0, c1 = _cache(params).tails()
    return PowerTail(1.0 + params.alpha, math.log(c0), math.log(c1), params.a)


class StableLogDensity:
    """Callable log psi with the tail descriptor integral corrections need."""

    def __init__(self, params: StableParams):
        if classify(params) is StableClass.EXTREMAL:
            raise ConfigError("reference density must be non-extremal")
        self.params = params

    def __call__(self, x):
        return log_pdf(self.params, x)

    def on_grid(self, x0: float, dx: float, n: int) -> np.ndarray:
        return log_pdf_on_grid(self.params, x0, dx, n)

    @property
    def tail(self):
        return reference_tail(self.params)


# ---------------------------------------------------------------------------
# sampling


def sample(params: StableParams, seed: int, count: int) -> np.ndarray:
    """Deterministic stable variates from (uniform, exponential) pairs.

    Uses the polar transform on Phi ~ U(-pi/2, pi/2), W ~ Exp(1).  The
    skewness sign is aligned with the characteristic function above: for
    alpha != 1 the transform's conventional skew parameter is -beta, for
    alpha = 1 it is +beta, and alpha = 1 scaling adds the (2/pi) c beta log c
    drift.
    """
    if count < 1:
        raise ConfigError("count must be >= 1")
    rng = np.random.default_rng(seed)
    phi = (rng.random(count) - 0.5) * math.pi
    w = rng.standard_exponential(count)
    al, be, c, a = params.alpha, params.beta, params.c, params.a

    if al == 2.0:
        return a + 2.0 * math.sqrt(c) * np.sqrt(w) * np.sin(phi)

    if al == 1.0:
        if be == 0.0:
            return a + c * np.tan(phi)
        bphi = 0.5 * math.pi + be * phi
        x0 = (2.0 / math.pi) * (
            bphi * np.tan(phi) - be * np.log((0.5 * math.pi) * w * np.cos(phi) / bphi)
        )
        return a + c * x0 + (2.0 / math.pi) * be * c * math.log(c)

    b_t = -be  # transform convention flips skew for alpha != 1
    sigma = c ** (1.0 / al)
    if b_t == 0.0:
        x0 = (
            np.sin(al * phi)
            / np.cos(phi) ** (1.0 / al)
            * (np.cos((1.0 - al) * phi) / w) ** ((1.0 - al) / al)
        )
    else:
        zeta = b_t * math.tan(math.pi * al / 2.0)
        b_ab = math.atan(zeta) / al
        s_ab = (1.0 + zeta * zeta) ** (1.0 / (2.0 * al))
        x0 = (
            s_ab
            * np.sin(al * (phi + b_ab))
            / np.cos(phi) ** (1.0 / al)
            * (np.cos(phi - al * (phi + b_ab)) / w) ** ((1.0 - al) / al)
        )
    return a + sigma * x0
