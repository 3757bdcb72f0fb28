"""End-to-end convergence experiments for normalized i.i.d. sums.

For each n in a run: build the density of Z_n = S_n/b_n - a_n by Fourier
convolution, build its smoothed companion from the binomial split, and
measure the KL divergence to the target stable law, the sup-norm gap of
the smoothed density, the KL gap between the two, an upper bound on the
smoothed KL derived from the sup gap, and the largest exponential
envelope the characteristic function satisfies on the scaled band.
"""

import concurrent.futures
import csv
import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar

from .config import DEFAULT_TOL, thread_count
from .decomposition import BoundedSplit, CheckReport, modified_density, split
from .errors import ConfigError
from .grid_density import (
    GridDensity,
    affine,
    cf_of_grid,
    convolve_power,
    crop_to_window,
    effective_values,
    _log_ref_values,
)
from .sources import NormalizerSequence, SourceModel, make_source
from .stable_law import StableClass, StableLogDensity, StableParams, classify

# fraction of the source window that remains faithful after the n-fold
# convolution of a window-truncated heavy-tailed density
CROP_SAFETY = 0.7

T_SCAN = tuple(1.0 + 0.5 * k for k in range(11))  # 1.0 .. 6.0


@dataclass(frozen=True)
class ExperimentConfig:
    schema_version: int
    source_kind: str
    source_params: dict
    target: StableParams
    n_list: tuple[int, ...]
    split_b: float
    eps: float
    t0: float
    x_min: float
    x_max: float
    n_points: int
    seed: int

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = {
            "schema_version",
            "source",
            "target",
            "n_list",
            "split_b",
            "eps",
            "t0",
            "grid",
            "seed",
        }
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config fields {sorted(unknown)}")
        missing = known - set(raw)
        if missing:
            raise ConfigError(f"missing config fields {sorted(missing)}")
        if raw["schema_version"] != 1:
            raise ConfigError(f"unsupported schema_version {raw['schema_version']}")
        src = raw["source"]
        if set(src) != {"kind", "params"}:
            raise ConfigError("source must have exactly the fields kind, params")
        tgt = raw["target"]
        if set(tgt) != {"alpha", "beta", "c", "a"}:
            raise ConfigError("target must have exactly the fields alpha, beta, c, a")
        grid = raw["grid"]
        if set(grid) != {"x_min", "x_max", "n_points"}:
            raise ConfigError("grid must have exactly the fields x_min, x_max, n_points")
        n_list = tuple(int(n) for n in raw["n_list"])
        if not n_list or any(n < 1 for n in n_list) or sorted(set(n_list)) != list(n_list):
            raise ConfigError("n_list must be strictly increasing positive integers")
        target = StableParams(tgt["alpha"], tgt["beta"], tgt["c"], tgt["a"])
        if classify(target) is StableClass.EXTREMAL:
            raise ConfigError("target must be non-extremal")
        eps = float(raw["eps"])
        if not 0.0 < eps <= 1.0:
            raise ConfigError("eps must lie in (0, 1]")
        return cls(
            schema_version=1,
            source_kind=src["kind"],
            source_params=dict(src["params"]),
            target=target,
            n_list=n_list,
            split_b=float(raw["split_b"]),
            eps=eps,
            t0=float(raw["t0"]),
            x_min=float(grid["x_min"]),
            x_max=float(grid["x_max"]),
            n_points=int(grid["n_points"]),
            seed=int(raw["seed"]),
        )

    @classmethod
    def from_json(cls, path: str) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def source_model(self) -> SourceModel:
        return make_source(self.source_kind, self.source_params)


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    D_n: float
    D_tilde_n: float
    sup_llt: float
    bound_6_3: float
    lemma41_gap: float
    cf_envelope_ok: bool


CSV_HEADER = "n,D_n,D_tilde_n,sup_llt,bound_6_3,lemma41_gap,cf_envelope_ok"


def rows_to_csv(rows: list[ConvergenceRow], path_or_handle) -> None:
    def write(fh):
        fh.write(CSV_HEADER + "\n")
        for r in rows:
            fh.write(
                f"{r.n},{r.D_n:.9g},{r.D_tilde_n:.9g},{r.sup_llt:.9g},"
                f"{r.bound_6_3:.9g},{r.lemma41_gap:.9g},"
                f"{'true' if r.cf_envelope_ok else 'false'}\n"
            )

    if hasattr(path_or_handle, "write"):
        write(path_or_handle)
    else:
        with open(path_or_handle, "w") as fh:
            write(fh)


def read_rows_csv(path: str) -> list[ConvergenceRow]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if ",".join(header) != CSV_HEADER:
            raise ConfigError(f"unexpected run CSV header {header}")
        for rec in reader:
            rows.append(
                ConvergenceRow(
                    n=int(rec[0]),
                    D_n=float(rec[1]),
                    D_tilde_n=float(rec[2]),
                    sup_llt=float(rec[3]),
                    bound_6_3=float(rec[4]),
                    lemma41_gap=float(rec[5]),
                    cf_envelope_ok=rec[6] == "true",
                )
            )
    return rows


# ---------------------------------------------------------------------------
# pipeline pieces


def _crop_width(source: GridDensity, b_n: float) -> float | None:
    if source.tail is None:
        return None
    half = min(abs(source.x0), source.x_end)
    return CROP_SAFETY * half / b_n


def zn_density(source: GridDensity, n: int, norm: NormalizerSequence) -> GridDensity:
    """Density of Z_n = S_n/b_n - a_n from the source grid.

    Heavy-tailed sources are cropped back to the faithful window after the
    convolution: beyond source-window/b_n the truncated convolution cannot
    represent the true tail, which the fitted continuation then covers.
    """
    a_n, b_n = norm.for_n(n)
    z = affine(convolve_power(source, n), a_n, b_n)
    width = _crop_width(source, b_n)
    if width is not None:
        z = crop_to_window(z, width)
    return z


@lru_cache(maxsize=32)
def c_epsilon(eps: float) -> float:
    """Smallest constant with t*log(t) <= (t-1) + C|t-1|^(1+eps) on t >= 0.

    Computed as the supremum of (t log t - t + 1)/|t-1|^(1+eps) over a log
    grid reaching past t = e^(1/eps) (where the ratio peaks for small eps),
    refined by a bounded scalar search.  For eps = 1 the supremum is 1.
    """
    if not 0.0 < eps <= 1.0:
        raise ConfigError("eps must lie in (0, 1]")

    def neg_ratio(t: float) -> float:
        if t <= 0.0:
            return -1.0
        d = abs(t - 1.0)
        if d < 1e-12:
            return 0.0
        num = t * math.log(t) - (t - 1.0)
        return -num / d ** (1.0 + eps)

    hi = 10.0 * math.exp(1.0 / eps)
    ts = np.concatenate(
        [
            np.logspace(-12, math.log10(hi), 4001),
            np.linspace(0.0, 2.0, 2001),
        ]
    )
    vals = np.array([-neg_ratio(float(t)) for t in ts])
    best = float(np.max(vals))
    t_star = float(ts[int(np.argmax(vals))])
    if t_star > 0.0:
        res = minimize_scalar(
            neg_ratio, bounds=(0.5 * t_star, 2.0 * t_star), method="bounded"
        )
        best = max(best, -float(res.fun))
    return max(best, 1.0)  # the t -> 0 limit is exactly 1


def kl_upper_bound_heavy(
    p_tilde: GridDensity, target: StableParams, eps: float, ref: StableLogDensity | None = None
) -> float:
    """Sup-distance upper bound on D(p_tilde || target) for power-tailed targets:

        C_eps * Delta^eps * (1/c_low^eps) * int (1+|x|)^(eps(1+alpha)) |p - psi| dx

    with Delta the sup gap and c_low the fitted constant of the target's
    lower envelope psi(x) >= c_low (1+|x|)^-(1+alpha) on the window.
    """
    kind = classify(target)
    if kind is not StableClass.NON_EXTREMAL:
        raise ConfigError("the power-tail bound needs a non-extremal, non-normal target")
    limit = target.alpha / (1.0 + target.alpha)
    if not 0.0 < eps < limit:
        raise ConfigError(f"eps must lie in (0, {limit:.4g}) for alpha={target.alpha}")
    ref = ref or StableLogDensity(target)
    log_psi = _log_ref_values(p_tilde, ref)
    psi = np.exp(log_psi)
    pv = effective_values(p_tilde)
    x = p_tilde.x
    delta = float(np.max(np.abs(pv - psi)))
    c_low = float(np.min(psi * (1.0 + np.abs(x)) ** (1.0 + target.alpha)))
    if c_low <= 0.0:
        raise ConfigError("target density vanished on the window")
    s = eps * (1.0 + target.alpha)
    integral = float(p_tilde.weights() @ ((1.0 + np.abs(x)) ** s * np.abs(pv - psi)))
    return c_epsilon(eps) * delta**eps * integral / c_low**eps


def kl_upper_bound_gaussian(p_tilde: GridDensity, T: float, m_sup: float) -> float:
    """Window/tail upper bound on D(p_tilde || N(0,1)):

        2 e^(T^2/2) sqrt(2 pi) Delta + int_{|x|>T} (x^2 + log(m_sup sqrt(2 pi))) p dx

    valid whenever p_tilde <= m_sup.
    """
    if T <= 0.0:
        raise ConfigError("T must be positive")
    pv = effective_values(p_tilde)
    if m_sup < float(pv.max()):
        raise ConfigError("m_sup must dominate the density")
    x = p_tilde.x
    phi = np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    delta = float(np.max(np.abs(pv - phi)))
    outer = np.abs(x) > T
    const = math.log(m_sup * math.sqrt(2.0 * math.pi))
    tail_term = float(p_tilde.weights()[outer] @ ((x[outer] ** 2 + const) * pv[outer]))
    return 2.0 * math.exp(0.5 * T * T) * math.sqrt(2.0 * math.pi) * delta + tail_term


def min_gaussian_bound(p_tilde: GridDensity, t_scan=T_SCAN) -> float:
    m_sup = max(1.0, float(effective_values(p_tilde).max()) * (1.0 + 1e-12))
    return min(kl_upper_bound_gaussian(p_tilde, T, m_sup) for T in t_scan)


def cf_envelope_check(
    source: GridDensity, norm: NormalizerSequence, n: int, t0: float
) -> tuple[float, bool]:
    """Largest c with |f_n(t)| <= exp(-c |t|^(alpha/2)) on (0, t0*b_n).

    |f_n(t)| = |f_source(t/b_n)|^n is evaluated from the source grid's
    characteristic function, so large n costs nothing in resolution.
    """
    a_n, b_n = norm.for_n(n)
    t_hi = t0 * b_n
    ts = np.logspace(math.log10(t_hi) - 3.0, math.log10(t_hi), 96)
    base = np.abs(cf_of_grid(source, ts / b_n))
    good = base > 0.0
    if not np.any(good):
        return math.inf, True
    log_fn = n * np.log(base[good])
    ratio = -log_fn / ts[good] ** (norm.alpha / 2.0)
    c_fit = float(np.min(ratio))
    return c_fit, c_fit > 0.0


def kl_gap_within_tolerance(gap: float, n: int, quad_tol: float = DEFAULT_TOL.quadrature_tol) -> bool:
    """The smoothed-vs-raw KL gap must fall below max(2^-n, 10*quad_tol);
    the floor guards the regime where 2^-n is beneath numerical resolution."""
    return gap < max(2.0 ** (-n), 10.0 * quad_tol)


@dataclass(frozen=True)
class LltTrend:
    sup_values: tuple[float, ...]
    monotone_within_slack: bool
    final_under_tenth_of_initial: bool

    @property
    def ok(self) -> bool:
        return self.monotone_within_slack and self.final_under_tenth_of_initial


def llt_check(rows: list[ConvergenceRow], slack: float = 0.10) -> LltTrend:
    """Sup-norm convergence across the run: nonincreasing within the given
    slack at each doubling and final below a tenth of the initial value."""
    if len(rows) < 4:
        raise ConfigError("llt trend needs at least 4 rows")
    sups = [r.sup_llt for r in rows]
    mono = all(sups[i + 1] <= (1.0 + slack) * sups[i] for i in range(len(sups) - 1))
    return LltTrend(
        sup_values=tuple(sups),
        monotone_within_slack=mono,
        final_under_tenth_of_initial=sups[-1] < 0.1 * sups[0],
    )


# ---------------------------------------------------------------------------
# the run


def _build_row(
    n: int,
    source: GridDensity,
    sp: BoundedSplit,
    norm: NormalizerSequence,
    ref: StableLogDensity,
    target: StableParams,
    eps: float,
    t0: float,
) -> ConvergenceRow:
    a_n, b_n = norm.for_n(n)
    width = _crop_width(source, b_n)
    if n == 1:
        zn = zn_density(source, 1, norm)
        smoothed = zn
    else:
        pair = modified_density(sp, n, a_n, b_n, crop_half_width=width)
        zn = pair.normalized_sum
        smoothed = pair.smoothed

    d_n = relative_entropy_to(zn, ref)
    d_tilde = d_n if n == 1 else relative_entropy_to(smoothed, ref)
    sup_llt = sup_gap_to(smoothed, ref)
    if classify(target) is StableClass.NORMAL:
        bound = min_gaussian_bound(smoothed)
    else:
        bound = kl_upper_bound_heavy(smoothed, target, eps, ref=ref)
    c_fit, env_ok = cf_envelope_check(source, norm, n, t0)
    return ConvergenceRow(
        n=n,
        D_n=d_n,
        D_tilde_n=d_tilde,
        sup_llt=sup_llt,
        bound_6_3=bound,
        lemma41_gap=abs(d_tilde - d_n),
        cf_envelope_ok=env_ok,
    )


def relative_entropy_to(p: GridDensity, ref: StableLogDensity) -> float:
    from .grid_density import relative_entropy

    return relative_entropy(p, ref)


def sup_gap_to(p: GridDensity, ref: StableLogDensity) -> float:
    """Sup over the window of |p - psi| on the effective (tail-consistent)
    values."""
    psi = np.exp(_log_ref_values(p, ref))
    return float(np.max(np.abs(effective_values(p) - psi)))


def run_convergence(config: ExperimentConfig) -> list[ConvergenceRow]:
    """All convergence rows of an experiment, ordered by n.

    Rows are independent; STABLE_ENTROPY_THREADS caps the parallel workers
    (0 or unset picks one per row up to the CPU count).
    """
    model = config.source_model()
    source = model.make_grid(config.x_min, config.x_max, config.n_points)
    norm = model.normalizer
    ref = StableLogDensity(config.target)
    sp = split(source, config.split_b)

    def job(n: int) -> ConvergenceRow:
        return _build_row(n, source, sp, norm, ref, config.target, config.eps, config.t0)

    workers = thread_count(len(config.n_list))
    if workers <= 1:
        rows = [job(n) for n in config.n_list]
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(job, config.n_list))
    return sorted(rows, key=lambda r: r.n)


def section_checks_for_run(
    config: ExperimentConfig, n_values: tuple[int, ...], s: float
) -> list[CheckReport]:
    """Decomposition closeness reports for selected n under a run's source."""
    from .decomposition import decomposition_checks

    model = config.source_model()
    source = model.make_grid(config.x_min, config.x_max, config.n_points)
    sp = split(source, config.split_b)
    out = []
    for n in n_values:
        a_n, b_n = model.normalizer.for_n(n)
        pair = modified_density(sp, n, a_n, b_n)
        out.append(decomposition_checks(sp, pair, s=s, t0=config.t0))
    return out
