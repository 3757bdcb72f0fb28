"""Monte-Carlo cross-checks for the grid pipeline.

Sample-based estimates of differential entropy (k-nearest-neighbor
estimator) and of relative entropy (mean log-ratio over draws), each with
a fold-based standard error, seeded and bit-reproducible.  These are
oracles: the grid values are the measurement, the Monte-Carlo values bound
how wrong they could be.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import digamma

from .errors import ConfigError, NumericalError
from .sources import NormalizerSequence

DEFAULT_FOLDS = 10
DEFAULT_K = 5


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_error: float
    n_samples: int
    k_neighbors: int | None = None

    def within(self, target: float, n_sigma: float = 3.0) -> bool:
        return abs(self.value - target) <= n_sigma * self.std_error


def sample_zn(
    sampler, n: int, norm: NormalizerSequence, m: int, seed: int
) -> np.ndarray:
    """m independent draws of the normalized n-fold sum, deterministic per seed."""
    if m < 1000:
        raise ConfigError("need at least 1000 samples")
    rng = np.random.default_rng(seed)
    draws = np.asarray(sampler(rng, m * n), dtype=float).reshape(m, n)
    a_n, b_n = norm.for_n(n)
    return draws.sum(axis=1) / b_n - a_n


def _kl_knn_entropy(x: np.ndarray, k: int) -> float:
    m = x.shape[0]
    if k >= m:
        raise ConfigError("k must be below the sample count")
    tree = cKDTree(x[:, None])
    dist, _ = tree.query(x[:, None], k=k + 1, workers=-1)
    r = dist[:, k]
    if np.any(r <= 0.0):
        raise NumericalError("zero nearest-neighbor distance survived jittering")
    return float(digamma(m) - digamma(k) + np.log(2.0) + np.mean(np.log(r)))


def _jitter_ties(samples: np.ndarray, jitter_seed: int) -> np.ndarray:
    x = np.asarray(samples, dtype=float)
    if np.unique(x).size == x.size:
        return x
    rng = np.random.default_rng(jitter_seed)
    x = x + 1e-12 * rng.standard_normal(x.size)
    dupes = x.size - np.unique(x).size
    if dupes > 0.01 * x.size:
        raise NumericalError(f"{dupes} ties remain after jittering")
    return x


def knn_entropy(
    samples,
    k: int = DEFAULT_K,
    folds: int = DEFAULT_FOLDS,
    jitter_seed: int = 0,
) -> McEstimate:
    """k-nearest-neighbor differential entropy with fold-based error bars.

    The standard error is the spread of the estimator over `folds` disjoint
    interleaved subsamples, scaled by 1/sqrt(folds).
    """
    if k < 1:
        raise ConfigError("k must be >= 1")
    x = _jitter_ties(samples, jitter_seed)
    value = _kl_knn_entropy(x, k)
    fold_vals = [_kl_knn_entropy(x[i::folds], k) for i in range(folds)]
    se = float(np.std(fold_vals, ddof=1) / np.sqrt(folds))
    return McEstimate(value=value, std_error=se, n_samples=x.size, k_neighbors=k)


def mc_relative_entropy(samples, log_p, log_psi, folds: int = DEFAULT_FOLDS) -> McEstimate:
    """Relative entropy as the sample mean of log p - log psi over p-draws."""
    x = np.asarray(samples, dtype=float)
    vals = np.asarray(log_p(x), dtype=float) - np.asarray(log_psi(x), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise NumericalError("log-ratio produced non-finite values on the samples")
    fold_means = [float(np.mean(vals[i::folds])) for i in range(folds)]
    se = float(np.std(fold_means, ddof=1) / np.sqrt(folds))
    return McEstimate(value=float(np.mean(vals)), std_error=se, n_samples=x.size)
