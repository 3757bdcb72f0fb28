"""Benchmark source distributions, their samplers, and attraction targets.

Each source knows its density (with half-values at jump points, the
Fourier-friendly convention), a seedable sampler, the tail exponent when
heavy-tailed, the stable law its normalized sums converge to, and the
normalizing sequence b_n = scale * n^(1/alpha) of normal attraction.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma as gamma_fn

from . import stable_law
from .errors import ConfigError
from .grid_density import GridDensity, from_function
from .stable_law import StableParams

_EDGE_RTOL = 1e-9


@dataclass(frozen=True)
class NormalizerSequence:
    """a_n, b_n with b_n = scale_const * n^(1/alpha).

    Centering is either zero (symmetric sources) or the mean shift
    a_n = n * mean / b_n that recenters finite-mean sums; stable sources
    with alpha = 1 and skew get the logarithmic drift their scaling law
    requires.  |a_n| + log b_n + 1/b_n grows at most polynomially in n.
    """

    alpha: float
    scale_const: float
    centering: str = "zero"  # zero | mean_shift | log_drift
    mean: float = 0.0
    drift_coef: float = 0.0
    values: dict = field(default_factory=dict, compare=False, repr=False)

    def for_n(self, n: int) -> tuple[float, float]:
        if n < 1:
            raise ConfigError("n must be >= 1")
        if n not in self.values:
            b_n = self.scale_const * n ** (1.0 / self.alpha)
            if self.centering == "zero":
                a_n = 0.0
            elif self.centering == "mean_shift":
                a_n = n * self.mean / b_n
            elif self.centering == "log_drift":
                a_n = self.drift_coef * math.log(n)
            else:
                raise ConfigError(f"unknown centering {self.centering!r}")
            self.values[n] = (a_n, b_n)
        return self.values[n]


@dataclass(frozen=True)
class SourceModel:
    kind: str
    density: object  # vectorized density function
    sampler: object  # sampler(rng, m) -> m draws
    attraction: StableParams  # the stable law the normalized sums approach
    normalizer: NormalizerSequence
    tail_exponent: float | None = None
    mean: float = 0.0
    stable_params: StableParams | None = None  # set when the source is itself stable

    def make_grid(self, x_min: float, x_max: float, n_points: int) -> GridDensity:
        if self.stable_params is not None:
            # exact log-density (closed form, or spline core + power tails):
            # pointwise quadrature per node would be slow, and FFT inversion
            # would fold the tail images back into the window and corrupt
            # the fitted tail amplitudes
            from .grid_density import make_density

            dx = (x_max - x_min) / (n_points - 1)
            x = x_min + dx * np.arange(n_points)
            vals = np.exp(stable_law.log_pdf(self.stable_params, x))
            return make_density(x_min, dx, vals, tail_exponent=self.tail_exponent)
        return from_function(
            self.density, x_min, x_max, n_points, tail_exponent=self.tail_exponent
        )


def _edges(x, lo, hi, scale):
    near_lo = np.abs(x - lo) <= _EDGE_RTOL * scale
    near_hi = np.abs(x - hi) <= _EDGE_RTOL * scale
    return near_lo | near_hi


def _uniform_source(params: dict) -> SourceModel:
    lo, hi = float(params["low"]), float(params["high"])
    if not lo < hi:
        raise ConfigError("uniform needs low < high")
    height = 1.0 / (hi - lo)
    scale = hi - lo

    def density(x):
        x = np.asarray(x, dtype=float)
        inside = (x > lo) & (x < hi)
        edge = _edges(x, lo, hi, scale)
        return np.where(edge, 0.5 * height, np.where(inside, height, 0.0))

    mean = 0.5 * (lo + hi)
    std = (hi - lo) / math.sqrt(12.0)
    return SourceModel(
        kind="uniform",
        density=density,
        sampler=lambda rng, m: rng.uniform(lo, hi, m),
        attraction=StableParams(2.0, 0.0, 0.5, 0.0),
        normalizer=NormalizerSequence(
            2.0, std, "mean_shift" if mean != 0.0 else "zero", mean=mean
        ),
        mean=mean,
    )


def _gaussian_source(params: dict) -> SourceModel:
    mean = float(params.get("mean", 0.0))
    std = float(params.get("std", 1.0))
    if std <= 0.0:
        raise ConfigError("gaussian needs std > 0")

    def density(x):
        x = np.asarray(x, dtype=float)
        return np.exp(-((x - mean) ** 2) / (2.0 * std * std)) / (std * math.sqrt(2.0 * math.pi))

    return SourceModel(
        kind="gaussian",
        density=density,
        sampler=lambda rng, m: rng.normal(mean, std, m),
        attraction=StableParams(2.0, 0.0, 0.5, 0.0),
        normalizer=NormalizerSequence(
            2.0, std, "mean_shift" if mean != 0.0 else "zero", mean=mean
        ),
        mean=mean,
    )


def _stable_source(params: dict, kind: str = "stable") -> SourceModel:
    if kind == "cauchy":
        sp = StableParams(1.0, 0.0, float(params.get("c", 1.0)), float(params.get("a", 0.0)))
    else:
        sp = StableParams(
            float(params["alpha"]),
            float(params.get("beta", 0.0)),
            float(params.get("c", 1.0)),
            float(params.get("a", 0.0)),
        )
    if stable_law.classify(sp) is stable_law.StableClass.EXTREMAL:
        raise ConfigError("extremal stable sources are out of scope")
    if sp.a != 0.0 and sp.alpha != 1.0:
        raise ConfigError("stable sources with alpha != 1 must be centered (a = 0)")

    if sp.alpha == 1.0 and sp.beta != 0.0:
        centering, drift = "log_drift", (2.0 * sp.c * sp.beta / math.pi)
    else:
        centering, drift = "zero", 0.0
    tail_e = None if sp.alpha == 2.0 else 1.0 + sp.alpha
    return SourceModel(
        kind=kind,
        density=lambda x: stable_law.pdf(sp, x, tol=1e-11),
        sampler=lambda rng_or_seed, m: _stable_draws(sp, rng_or_seed, m),
        attraction=sp if sp.alpha != 2.0 else StableParams(2.0, 0.0, sp.c, sp.a),
        normalizer=NormalizerSequence(sp.alpha, 1.0, centering, drift_coef=drift),
        tail_exponent=tail_e,
        mean=sp.a,
        stable_params=sp,
    )


def _stable_draws(sp: StableParams, rng: np.random.Generator, m: int) -> np.ndarray:
    seed = int(rng.integers(0, 2**63 - 1))
    return stable_law.sample(sp, seed, m)


def pareto_attraction_scale(alpha: float, density_amp: float) -> float:
    """Scale c of the symmetric stable limit for a source whose density
    tails are density_amp * |x|^-(1+alpha): the sums S_n / n^(1/alpha)
    keep exactly those tail constants, and for the limit law the density
    tail amplitude equals c * Gamma(1+alpha) * sin(pi*alpha/2) / pi."""
    return density_amp * math.pi / (gamma_fn(1.0 + alpha) * math.sin(math.pi * alpha / 2.0))


def _pareto_source(params: dict) -> SourceModel:
    alpha = float(params["alpha"])
    x_min = float(params.get("x_min", 1.0))
    if not (0.0 < alpha < 2.0):
        raise ConfigError("pareto tail index must be in (0, 2) for a stable limit")
    if x_min <= 0.0:
        raise ConfigError("pareto needs x_min > 0")
    amp = 0.5 * alpha * x_min**alpha
    height = 0.5 * alpha / x_min

    def density(x):
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        out = np.where(ax >= x_min, amp * np.where(ax > 0, ax, 1.0) ** (-1.0 - alpha), 0.0)
        edge = np.abs(ax - x_min) <= _EDGE_RTOL * x_min
        return np.where(edge, 0.5 * height, out)

    def sampler(rng, m):
        mag = x_min * rng.random(m) ** (-1.0 / alpha)
        sign = np.where(rng.random(m) < 0.5, -1.0, 1.0)
        return sign * mag

    c_target = pareto_attraction_scale(alpha, amp)
    return SourceModel(
        kind="pareto",
        density=density,
        sampler=sampler,
        attraction=StableParams(alpha, 0.0, c_target, 0.0),
        normalizer=NormalizerSequence(alpha, 1.0, "zero"),
        tail_exponent=1.0 + alpha,
    )


_FACTORIES = {
    "uniform": _uniform_source,
    "gaussian": _gaussian_source,
    "cauchy": lambda params: _stable_source(params, kind="cauchy"),
    "stable": _stable_source,
    "pareto": _pareto_source,
}

_KNOWN_PARAMS = {
    "uniform": {"low", "high"},
    "gaussian": {"mean", "std"},
    "cauchy": {"c", "a"},
    "stable": {"alpha", "beta", "c", "a"},
    "pareto": {"alpha", "x_min"},
}


def make_source(kind: str, params: dict) -> SourceModel:
    if kind not in _FACTORIES:
        raise ConfigError(f"unknown source kind {kind!r}; known: {sorted(_FACTORIES)}")
    unknown = set(params) - _KNOWN_PARAMS[kind]
    if unknown:
        raise ConfigError(f"unknown {kind} parameters {sorted(unknown)}")
    return _FACTORIES[kind](params)
