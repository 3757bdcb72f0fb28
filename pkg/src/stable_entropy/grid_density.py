"""Uniform-grid densities and the functionals computed over them.

A GridDensity is a nonnegative sampled density with unit trapezoidal mass
on a power-of-two grid.  Heavy-tailed densities additionally carry a fitted
power-tail model; every integral functional (mass, entropy, cross entropy,
relative entropy, absolute moments) then adds the closed-form power-law
continuation beyond the represented window, since window truncation - not
the quadrature rule - is the dominant error for such densities.

Unit mass is enforced on the window, so a truncated heavy-tailed density
stores values inflated by its discarded tail mass.  The functionals undo
that consistently: they evaluate on the jointly renormalized pair
(grid values, fitted tail continuation) scaled to total mass one, which
makes a stable law compared against its own grid restriction exact to
second order in the discarded mass.
"""

import csv
import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .config import DEFAULT_TOL
from .errors import (
    ConfigError,
    DivergentMomentError,
    NegativeLobeError,
    TruncationError,
    WrapAroundError,
)
from .stable_law import GaussianTail, PowerTail


def _is_pow2(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


def trap_weights(n: int, dx: float) -> np.ndarray:
    w = np.full(n, dx)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


@dataclass(frozen=True)
class TailModel:
    """Two-sided power-tail continuation p(x) ~ amp * |x|^-exponent.

    Amplitudes are stored as logs; x_left / x_right are the window edges
    the continuation starts from (x_left < 0 < x_right).
    """

    exponent: float
    log_amp_left: float
    log_amp_right: float
    x_left: float
    x_right: float


@dataclass(frozen=True)
class GridDensity:
    x0: float
    dx: float
    values: np.ndarray
    tail: TailModel | None = None
    mass_tol: float = DEFAULT_TOL.mass_tol
    renorm: float = 1.0  # factor the raw samples were multiplied by

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if self.dx <= 0.0:
            raise ConfigError("dx must be positive")
        if not _is_pow2(vals.size):
            raise ConfigError(f"grid length must be a power of two, got {vals.size}")
        if np.any(vals < 0.0):
            raise NegativeLobeError("grid density has negative values")
        mass = float(trap_weights(vals.size, self.dx) @ vals)
        if abs(mass - 1.0) > self.mass_tol:
            raise ConfigError(f"trapezoidal mass {mass} outside 1 +/- {self.mass_tol}")
        if self.tail is not None and not self.tail.exponent > 1.0:
            raise ConfigError("tail exponent must exceed 1 for integrability")

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.n)

    @property
    def x_end(self) -> float:
        return self.x0 + self.dx * (self.n - 1)

    @property
    def tail_exponent(self) -> float | None:
        return None if self.tail is None else self.tail.exponent

    def weights(self) -> np.ndarray:
        return trap_weights(self.n, self.dx)


# ---------------------------------------------------------------------------
# construction


def _fit_tail_model(x: np.ndarray, values: np.ndarray, exponent: float) -> TailModel:
    """Amplitudes of |x|^-exponent on the outer tenth of the support per side."""
    nz = np.nonzero(values > 0.0)[0]
    if nz.size < 32:
        raise ConfigError("support too small to fit a tail model")
    i_lo, i_hi = int(nz[0]), int(nz[-1])
    k = max(8, (i_hi - i_lo) // 10)
    left = slice(i_lo, i_lo + k)
    right = slice(i_hi - k + 1, i_hi + 1)
    if x[left].max() >= 0.0 or x[right].min() <= 0.0:
        raise ConfigError("tail-fit windows must sit strictly on one side of 0")
    amp_l = float(np.mean(values[left] * np.abs(x[left]) ** exponent))
    amp_r = float(np.mean(values[right] * np.abs(x[right]) ** exponent))
    if amp_l <= 0.0 or amp_r <= 0.0:
        raise ConfigError("tail-fit produced nonpositive amplitude")
    return TailModel(
        exponent=exponent,
        log_amp_left=math.log(amp_l),
        log_amp_right=math.log(amp_r),
        x_left=float(x[i_lo]),
        x_right=float(x[i_hi]),
    )


def make_density(
    x0: float,
    dx: float,
    raw_values: np.ndarray,
    tail_exponent: float | None = None,
    mass_tol: float = DEFAULT_TOL.mass_tol,
) -> GridDensity:
    """Normalize raw nonnegative samples to unit mass and wrap them."""
    raw = np.asarray(raw_values, dtype=float)
    mass = float(trap_weights(raw.size, dx) @ raw)
    if mass <= 0.0:
        raise ConfigError("cannot normalize a zero-mass sample")
    vals = raw / mass
    tail = None
    if tail_exponent is not None:
        x = x0 + dx * np.arange(raw.size)
        tail = _fit_tail_model(x, vals, tail_exponent)
    return GridDensity(x0, dx, vals, tail=tail, mass_tol=mass_tol, renorm=1.0 / mass)


def from_function(
    f,
    x_min: float,
    x_max: float,
    n_points: int,
    tail_exponent: float | None = None,
    mass_tol: float = DEFAULT_TOL.mass_tol,
) -> GridDensity:
    """Sample a density function onto a grid and renormalize to unit mass.

    Fails with TruncationError when the window captures less than 99% of
    the mass - widen the window (and rely on the tail model) instead of
    silently inflating the core.
    """
    if not (x_min < x_max):
        raise ConfigError("x_min must be below x_max")
    if not _is_pow2(n_points) or n_points < 256:
        raise ConfigError("n_points must be a power of two >= 256")
    dx = (x_max - x_min) / (n_points - 1)
    x = x_min + dx * np.arange(n_points)
    vals = np.asarray(f(x), dtype=float)
    if vals.shape != x.shape:
        raise ConfigError("density function must evaluate elementwise on arrays")
    if np.any(vals < 0.0):
        raise ConfigError("density function returned negative values")
    raw_mass = float(trap_weights(n_points, dx) @ vals)
    if raw_mass < 0.99:
        raise TruncationError(
            f"window [{x_min}, {x_max}] captures only mass {raw_mass:.6f}"
        )
    return make_density(x_min, dx, vals, tail_exponent=tail_exponent, mass_tol=mass_tol)


# ---------------------------------------------------------------------------
# transforms


def convolve_power(p: GridDensity, n: int) -> GridDensity:
    """n-fold self-convolution through the Fourier domain.

    The grid is zero-padded to the next power of two covering the full
    n-fold support, so circular wrap cannot occur by construction; the
    boundary check remains as a safety net.  Round-off negatives are
    clipped, values below the clip floor raise.
    """
    if n < 1:
        raise ConfigError("convolution power must be >= 1")
    if n == 1:
        return p
    m = 1 << math.ceil(math.log2(n * (p.n - 1) + 1))
    spec = np.fft.rfft(p.values, m)
    conv = np.fft.irfft(spec**n, m) * p.dx ** (n - 1)

    junk = conv[n * (p.n - 1) + 1 :]
    if junk.size and float(np.max(np.abs(junk))) > DEFAULT_TOL.wrap_floor:
        raise WrapAroundError("convolution leaked beyond the n-fold support")
    low = float(conv.min())
    if low < DEFAULT_TOL.neg_floor:
        raise NegativeLobeError(f"convolution produced values down to {low}")
    conv = np.maximum(conv, 0.0)

    deficit = max(0.0, 1.0 - 1.0 / p.renorm)
    mass = float(trap_weights(m, p.dx) @ conv)
    allowed = n * (p.mass_tol + 1.5 * deficit) + 1e-9
    if abs(mass - 1.0) > allowed:
        raise WrapAroundError(
            f"convolution mass {mass} drifted beyond the allowance {allowed}"
        )
    return make_density(
        n * p.x0, p.dx, conv, tail_exponent=p.tail_exponent, mass_tol=p.mass_tol
    )


def affine(p: GridDensity, a_n: float, b_n: float) -> GridDensity:
    """Density of X/b_n - a_n for X ~ p; mass is preserved exactly."""
    if b_n <= 0.0:
        raise ConfigError("scale b_n must be positive")
    if a_n == 0.0 and b_n == 1.0:
        return p
    vals = p.values * b_n
    x0 = p.x0 / b_n - a_n
    dx = p.dx / b_n
    tail = None
    if p.tail is not None:
        tail = _fit_tail_model(x0 + dx * np.arange(p.n), vals, p.tail.exponent)
    return GridDensity(x0, dx, vals, tail=tail, mass_tol=p.mass_tol, renorm=p.renorm)


def crop_to_window(p: GridDensity, half_width: float) -> GridDensity:
    """Restrict to [-half_width, half_width] (power-of-two bins) and renormalize.

    Used after normalizing heavy-tailed convolutions: beyond the faithful
    window the n-fold convolution of a window-truncated source underestimates
    the true density, so the representation is cut there and the fitted tail
    continuation takes over.
    """
    if half_width <= 0.0:
        raise ConfigError("half_width must be positive")
    if p.x0 >= -half_width and p.x_end <= half_width:
        return p
    x = p.x
    i0 = int(np.searchsorted(x, -half_width, side="left"))
    i1 = int(np.searchsorted(x, half_width, side="right"))
    count = i1 - i0
    if count < 256:
        raise ConfigError("crop window too narrow for the grid resolution")
    keep = 1 << int(math.floor(math.log2(count)))
    i0 += (count - keep) // 2
    vals = p.values[i0 : i0 + keep]
    return make_density(
        float(x[i0]), p.dx, vals, tail_exponent=p.tail_exponent, mass_tol=p.mass_tol
    )


# ---------------------------------------------------------------------------
# tail corrections (per side: amp * |x|^-e beyond |edge|)


def _power_ints(X: float, e: float) -> tuple[float, float]:
    # I0 = int_X^inf u^-e du ; I1 = int_X^inf u^-e log u du
    i0 = X ** (1.0 - e) / (e - 1.0)
    i1 = X ** (1.0 - e) * math.log(X) / (e - 1.0) + X ** (1.0 - e) / (e - 1.0) ** 2
    return i0, i1


def _tail_sides(model: TailModel):
    yield -1.0, math.exp(model.log_amp_left), abs(model.x_left)
    yield +1.0, math.exp(model.log_amp_right), abs(model.x_right)


def _model_mass(model: TailModel) -> float:
    total = 0.0
    for _, amp, X in _tail_sides(model):
        i0, _ = _power_ints(X, model.exponent)
        total += amp * i0
    return total


def tail_mass(p: GridDensity) -> float:
    """Mass of the fitted continuation beyond the window (0 without a model)."""
    if p.tail is None:
        return 0.0
    return _model_mass(p.tail)


def _effective(p: GridDensity):
    """Grid values and tail model jointly rescaled to total mass one.

    The stored values integrate to 1 on the window alone; dividing both
    the values and the tail amplitudes by (1 + fitted tail mass) yields a
    consistent estimate of the underlying density, removing the inflation
    the window renormalization applied to a truncated heavy tail.
    """
    if p.tail is None:
        return p.values, None
    tm = _model_mass(p.tail)
    scale = 1.0 / (1.0 + tm)
    model = replace(
        p.tail,
        log_amp_left=p.tail.log_amp_left + math.log(scale),
        log_amp_right=p.tail.log_amp_right + math.log(scale),
    )
    return p.values * scale, model


def effective_values(p: GridDensity) -> np.ndarray:
    """Grid values rescaled so window plus tail continuation carries mass one."""
    return _effective(p)[0]


def _tail_entropy(model: TailModel) -> float:
    e = model.exponent
    total = 0.0
    for _, amp, X in _tail_sides(model):
        i0, i1 = _power_ints(X, e)
        total += -amp * math.log(amp) * i0 + amp * e * i1
    return total


def _tail_cross(model: TailModel, ref) -> float:
    """int of tail-model density times -log(reference) beyond the window."""
    e = model.exponent
    total = 0.0
    if isinstance(ref, PowerTail):
        for sign, amp, X in _tail_sides(model):
            i0, i1 = _power_ints(X, e)
            lc = ref.log_amp_left if sign < 0 else ref.log_amp_right
            total += amp * (-lc * i0 + ref.exponent * i1)
        return total
    if isinstance(ref, GaussianTail):
        if e <= 3.0:
            return math.inf
        m, v = ref.mean, ref.var
        for sign, amp, X in _tail_sides(model):
            i0, _ = _power_ints(X, e)
            i2 = X ** (3.0 - e) / (e - 3.0)
            i1x = X ** (2.0 - e) / (e - 2.0)
            quad = i2 - 2.0 * sign * m * i1x + m * m * i0
            total += amp * (quad / (2.0 * v) + 0.5 * math.log(2.0 * math.pi * v) * i0)
        return total
    raise ConfigError(f"unknown reference tail descriptor {ref!r}")


def _tail_kl(model: TailModel, ref) -> float:
    cross = _tail_cross(model, ref)
    if math.isinf(cross):
        return math.inf
    return cross - _tail_entropy(model)


def _tail_abs_moment(model: TailModel, s: float) -> float:
    e = model.exponent
    if s >= e - 1.0:
        raise DivergentMomentError(
            f"moment order {s} diverges under tail exponent {e}"
        )
    total = 0.0
    for _, amp, X in _tail_sides(model):
        total += amp * X ** (s + 1.0 - e) / (e - 1.0 - s)
    return total


def _tail_log1p_moment(model: TailModel) -> float:
    # log(1+u) ~ log u + 1/u for u >= window edge
    e = model.exponent
    total = 0.0
    for _, amp, X in _tail_sides(model):
        _, i1 = _power_ints(X, e)
        total += amp * (i1 + X ** (-e) / e)
    return total


# ---------------------------------------------------------------------------
# functionals


def entropy(p: GridDensity) -> float:
    """Differential entropy -int p log p with 0 log 0 = 0 and tail continuation."""
    v, model = _effective(p)
    w = p.weights()
    mask = v > 0.0
    core = -float(np.dot(w[mask] * v[mask], np.log(v[mask])))
    if model is not None:
        core += _tail_entropy(model)
    return core


def _log_ref_values(p: GridDensity, log_psi) -> np.ndarray:
    if hasattr(log_psi, "on_grid"):
        out = log_psi.on_grid(p.x0, p.dx, p.n)
    else:
        out = np.asarray(log_psi(p.x), dtype=float)
    if out.shape != (p.n,):
        raise ConfigError("reference log-density must evaluate elementwise")
    return out


def relative_entropy(p: GridDensity, log_psi) -> float:
    """KL divergence of the effective density from the reference.

    Window integral plus the fitted-tail continuation against the
    reference's own tail descriptor.  Returns +inf when that continuation
    diverges (power tail against a Gaussian reference needs exponent > 3).
    """
    log_ref = _log_ref_values(p, log_psi)
    v, model = _effective(p)
    w = p.weights()
    mask = v > 0.0
    core = float(np.dot(w[mask] * v[mask], np.log(v[mask]) - log_ref[mask]))
    if model is not None:
        ref_tail = getattr(log_psi, "tail", None)
        if ref_tail is not None:
            corr = _tail_kl(model, ref_tail)
            if math.isinf(corr):
                return math.inf
            core += corr
    return core


def cross_entropy(p: GridDensity, log_psi) -> float:
    """int p log(1/psi), the reference term of the entropy identity."""
    log_ref = _log_ref_values(p, log_psi)
    v, model = _effective(p)
    w = p.weights()
    mask = v > 0.0
    core = float(np.dot(w[mask] * v[mask], -log_ref[mask]))
    if model is not None:
        ref_tail = getattr(log_psi, "tail", None)
        if ref_tail is not None:
            corr = _tail_cross(model, ref_tail)
            if math.isinf(corr):
                return math.inf
            core += corr
    return core


def abs_moment(p: GridDensity, s: float) -> float:
    """E|X|^s with tail continuation; raises when the tail makes it diverge."""
    if s <= 0.0:
        raise ConfigError("moment order must be positive")
    v, model = _effective(p)
    core = float(np.dot(p.weights() * v, np.abs(p.x) ** s))
    if model is not None:
        core += _tail_abs_moment(model, s)
    return core


def log1p_abs_moment(p: GridDensity) -> float:
    """E log(1 + |X|), the finiteness gauge for power-tail references."""
    v, model = _effective(p)
    core = float(np.dot(p.weights() * v, np.log1p(np.abs(p.x))))
    if model is not None:
        core += _tail_log1p_moment(model)
    return core


def _resample_pair(p: GridDensity, q: GridDensity):
    if p.x0 == q.x0 and p.dx == q.dx and p.n == q.n:
        return p.x, p.values, q.values, p.weights()
    dx = min(p.dx, q.dx)
    lo = min(p.x0, q.x0)
    hi = max(p.x_end, q.x_end)
    n = int(math.floor((hi - lo) / dx)) + 1
    x = lo + dx * np.arange(n)
    pv = np.interp(x, p.x, p.values, left=0.0, right=0.0)
    qv = np.interp(x, q.x, q.values, left=0.0, right=0.0)
    return x, pv, qv, trap_weights(n, dx)


def distance(p: GridDensity, q: GridDensity, metric: str = "l1", s: float = 1.0) -> float:
    """L1, |x|^s-weighted L1, or sup distance on a common grid."""
    x, pv, qv, w = _resample_pair(p, q)
    diff = np.abs(pv - qv)
    if metric == "l1":
        return float(w @ diff)
    if metric == "weighted_l1":
        return float(w @ (np.abs(x) ** s * diff))
    if metric == "sup":
        return float(diff.max())
    raise ConfigError(f"unknown metric {metric!r}")


def cf_of_grid(p: GridDensity, t) -> complex | np.ndarray:
    """Characteristic function of the grid density at frequencies t.

    Only the band |t| <= pi/dx is resolvable on the grid.
    """
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    band = math.pi / p.dx
    if np.any(np.abs(t_arr) > band * (1.0 + 1e-12)):
        raise ConfigError(f"frequency outside the resolvable band |t| <= {band:.6g}")
    wv = p.weights() * p.values
    x = p.x
    out = np.empty(t_arr.size, dtype=complex)
    chunk = max(1, (1 << 22) // p.n)
    for k0 in range(0, t_arr.size, chunk):
        ph = np.multiply.outer(t_arr[k0 : k0 + chunk], x)
        out[k0 : k0 + chunk] = (np.cos(ph) + 1j * np.sin(ph)) @ wv
    if np.isscalar(t) or np.asarray(t).ndim == 0:
        return complex(out[0])
    return out


def cf_tail_integral(p: GridDensity, T: float, pad_factor: int = 4) -> float:
    """int of |p-hat(t)| over T <= |t| <= pi/dx (both CF tails).

    The spectrum is sampled by a zero-padded FFT so the trapezoidal rule
    resolves the oscillation scale 2*pi/window of |p-hat|.
    """
    if T < 0.0:
        raise ConfigError("T must be nonnegative")
    band = math.pi / p.dx
    if T >= band:
        return 0.0
    m = p.n * pad_factor
    spec = np.abs(np.fft.rfft(p.values, m)) * p.dx
    freqs = 2.0 * math.pi * np.arange(spec.size) / (m * p.dx)
    sel = freqs <= band
    freqs, spec = freqs[sel], spec[sel]
    mask = freqs >= T
    if not np.any(mask):
        return 0.0
    # half-open trapezoid from exactly T to the band edge
    f_in, s_in = freqs[mask], spec[mask]
    integral = float(np.trapezoid(s_in, f_in))
    i0 = int(np.argmax(mask))
    if i0 > 0:
        f_prev, s_prev = freqs[i0 - 1], spec[i0 - 1]
        frac = (f_in[0] - T) / (f_in[0] - f_prev)
        s_at_T = s_in[0] + frac * (s_prev - s_in[0])
        integral += 0.5 * (s_at_T + s_in[0]) * (f_in[0] - T)
    return 2.0 * integral


def log_interpolator(p: GridDensity):
    """Callable log p(x): linear interpolation of log values on the support,
    the fitted tail line beyond the window, a hard floor elsewhere."""
    floor = -690.0
    v = p.values
    logv = np.where(v > 0.0, np.log(np.maximum(v, 1e-300)), floor)
    x = p.x
    tail = p.tail

    def log_p(pts):
        pts = np.atleast_1d(np.asarray(pts, dtype=float))
        out = np.interp(pts, x, logv, left=floor, right=floor)
        if tail is not None:
            left = pts < x[0]
            right = pts > x[-1]
            if np.any(left):
                out[left] = tail.log_amp_left - tail.exponent * np.log(np.abs(pts[left]))
            if np.any(right):
                out[right] = tail.log_amp_right - tail.exponent * np.log(pts[right])
        return out

    return log_p


def fit_tail_exponent(p: GridDensity) -> tuple[float, float]:
    """Free log-log least-squares fit of the decay exponent on each side."""
    nz = np.nonzero(p.values > 0.0)[0]
    if nz.size < 64:
        raise ConfigError("support too small for a tail fit")
    i_lo, i_hi = int(nz[0]), int(nz[-1])
    k = max(16, (i_hi - i_lo) // 10)
    out = []
    for sl in (slice(i_lo, i_lo + k), slice(i_hi - k + 1, i_hi + 1)):
        xs = np.abs(p.x[sl])
        vs = p.values[sl]
        good = vs > 0.0
        if good.sum() < 8 or xs[good].min() <= 0.0:
            raise ConfigError("tail fit window degenerate")
        slope = np.polyfit(np.log(xs[good]), np.log(vs[good]), 1)[0]
        out.append(-float(slope))
    return out[0], out[1]


# ---------------------------------------------------------------------------
# serialization: CSV of (x, value) plus a JSON sidecar


def write_csv(p: GridDensity, path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "value"])
        for xi, vi in zip(p.x, p.values):
            writer.writerow([f"{xi:.9g}", f"{vi:.9g}"])
    sidecar = {
        "x0": p.x0,
        "dx": p.dx,
        "n": p.n,
        "tail_exponent": p.tail_exponent,
    }
    with open(path + ".json", "w") as fh:
        json.dump(sidecar, fh, indent=2)
        fh.write("\n")


def read_csv(path: str) -> GridDensity:
    with open(path + ".json") as fh:
        sidecar = json.load(fh)
    vals = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["x", "value"]:
            raise ConfigError(f"unexpected density CSV header {header}")
        for row in reader:
            vals.append(float(row[1]))
    if len(vals) != sidecar["n"]:
        raise ConfigError("density CSV length disagrees with its sidecar")
    return make_density(
        sidecar["x0"], sidecar["dx"], np.asarray(vals), tail_exponent=sidecar["tail_exponent"]
    )
