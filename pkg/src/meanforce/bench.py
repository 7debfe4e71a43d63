"""Numerical certification of the kinetic-energy and variance-composition bounds
on sampled imaginary-time path ensembles.

The two scalar functions

    h_sin(x) = x^2 (x + sin x) / (x - sin x)
    h_hyp(x) = x^2 (sinh x + x) / (sinh x - x)

have strictly positive minima; the smaller of the two is the constant ``mu``
in the kinetic bound  <fdot^2>  >=  mu * var(g) / beta^2  for paths f = g + eps
with a small bounded perturbation eps. The composition bound states that a
monotone map f with f' >= C > 0 cannot shrink a path's variance below C^2
times the original.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .operators import PreconditionError

KIND_SIN = "SIN"
KIND_HYP = "HYP"

_SERIES_CUTOFF = 0.05
_NOISE_SEED_POINTS = 64
_NOISE_KEEP_HARMONICS = 6
_NOISE_MAX_GRID = 4096


@dataclass(frozen=True)
class SampledPath:
    """A real path sampled on the inclusive uniform grid t_j = j*beta/(n_t - 1)."""

    beta: float
    values: np.ndarray
    periodic: bool = True

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if not self.beta > 0:
            raise PreconditionError(f"beta must be positive, got {self.beta}")
        if v.ndim != 1 or v.shape[0] < 64:
            raise PreconditionError("paths need at least 64 samples")
        if not np.all(np.isfinite(v)):
            raise PreconditionError("path values must be finite")

    @property
    def n_t(self) -> int:
        return self.values.shape[0]

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.beta, self.n_t)


@dataclass(frozen=True)
class PathStats:
    mean: float
    mean_sq: float
    variance: float

    def __post_init__(self):
        if self.variance < -1e-12:
            raise PreconditionError(f"variance {self.variance} below -1e-12")


def path_stats(path: SampledPath) -> PathStats:
    """Trapezoidal time averages of the path and its square."""
    t = path.times
    mean = float(np.trapezoid(path.values, t) / path.beta)
    mean_sq = float(np.trapezoid(path.values**2, t) / path.beta)
    return PathStats(mean=mean, mean_sq=mean_sq, variance=mean_sq - mean * mean)


def path_derivative(path: SampledPath) -> np.ndarray:
    """Time derivative on the sample grid.

    Periodic paths are differentiated spectrally (exact for trigonometric
    polynomials resolved by the grid); non-periodic paths fall back to
    centered differences with one-sided ends.
    """
    if not path.periodic:
        return np.gradient(path.values, path.times)
    n = path.n_t - 1  # drop the duplicated endpoint
    v = path.values[:n]
    freqs = np.fft.fftfreq(n, d=path.beta / n)
    mult = 2j * np.pi * freqs
    if n % 2 == 0:
        mult[n // 2] = 0.0  # Nyquist mode has no well-defined derivative sign
    deriv = np.fft.ifft(np.fft.fft(v) * mult).real
    return np.concatenate([deriv, deriv[:1]])


def h_sin(x):
    """x^2 (x + sin x)/(x - sin x), with the x -> 0 limit 12 filled in by series."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < _SERIES_CUTOFF
    xs = np.where(small, 1.0, x)  # avoid 0/0 in the masked lanes
    direct = xs * xs * (xs + np.sin(xs)) / (xs - np.sin(xs))
    x2 = x * x
    series = 12.0 * (1.0 - x2 / 30.0 + 11.0 * x2 * x2 / 8400.0)
    out = np.where(small, series, direct)
    return float(out) if out.ndim == 0 else out


def h_hyp(x):
    """x^2 (sinh x + x)/(sinh x - x), with the x -> 0 limit 12 filled in by series."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < _SERIES_CUTOFF
    xs = np.where(small, 1.0, x)
    direct = xs * xs * (np.sinh(xs) + xs) / (np.sinh(xs) - xs)
    x2 = x * x
    series = 12.0 * (1.0 + x2 / 30.0 + 11.0 * x2 * x2 / 8400.0)
    out = np.where(small, series, direct)
    return float(out) if out.ndim == 0 else out


def _golden_section(fn: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12):
    phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol * max(1.0, abs(a) + abs(b)):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = fn(d)
    x = 0.5 * (a + b)
    return x, fn(x)


def minimize_h(kind: str, x_max: float = 50.0, n_scan: int = 100_000) -> tuple:
    """Global minimum of h_sin or h_hyp over (0, x_max].

    A dense scan (including the x -> 0 series limit) brackets the minimum and
    golden-section refines it. The hyperbolic branch is increasing, so its
    infimum 12 is reported at x = 0.
    """
    if x_max < 50.0:
        raise PreconditionError(f"x_max must be >= 50, got {x_max}")
    if n_scan < 10_000:
        raise PreconditionError(f"n_scan must be >= 10000, got {n_scan}")
    fn = {KIND_SIN: h_sin, KIND_HYP: h_hyp}.get(kind)
    if fn is None:
        raise PreconditionError(f"kind must be {KIND_SIN!r} or {KIND_HYP!r}, got {kind!r}")
    xs = np.linspace(0.0, x_max, n_scan)
    vals = fn(xs)
    i = int(np.argmin(vals))
    if i == 0:
        return 0.0, float(vals[0])
    lo = xs[max(i - 1, 0)]
    hi = xs[min(i + 1, n_scan - 1)]
    x_star, h_star = _golden_section(lambda x: float(fn(x)), float(lo), float(hi))
    return float(x_star), float(h_star)


@functools.lru_cache(maxsize=None)
def certified_mu() -> float:
    """The kinetic-bound constant: the smaller minimum of the two h branches."""
    return min(minimize_h(KIND_SIN)[1], minimize_h(KIND_HYP)[1])


@dataclass(frozen=True)
class BoundCheck:
    """One inequality check: lhs >= rhs up to the quadrature tolerance.

    ``in_regime`` marks trials that satisfy the bound's validity conditions;
    only those count toward a pass criterion.
    """

    lhs: float
    rhs: float
    margin: float
    satisfied: bool
    in_regime: bool = True


def random_fourier_path(
    rng: np.random.Generator, beta: float, n_modes: int = 10, n_t: int = 1024
) -> SampledPath:
    """Truncated Fourier series with independent standard-normal coefficients."""
    a = rng.normal(size=n_modes)
    b = rng.normal(size=n_modes)
    t = np.linspace(0.0, beta, n_t)
    phases = 2.0 * np.pi * np.arange(1, n_modes + 1)[:, None] * t[None, :] / beta
    values = a @ np.cos(phases) + b @ np.sin(phases)
    return SampledPath(beta=beta, values=values, periodic=True)


def bounded_smooth_noise(
    rng: np.random.Generator, beta: float, bound: float, n_t: int
) -> np.ndarray:
    """Low-pass-filtered uniform noise rescaled to sup-norm ``bound``.

    The filtered signal is reconstructed as a low-order trigonometric series,
    so it is differentiable and its values do not depend on n_t.
    """
    u = rng.uniform(-1.0, 1.0, _NOISE_SEED_POINTS)
    spec = np.fft.rfft(u)
    spec[_NOISE_KEEP_HARMONICS + 1 :] = 0.0

    def series(t):
        out = np.full_like(t, spec[0].real / _NOISE_SEED_POINTS)
        for k in range(1, _NOISE_KEEP_HARMONICS + 1):
            theta = 2.0 * np.pi * k * t / beta
            out += (2.0 / _NOISE_SEED_POINTS) * (
                spec[k].real * np.cos(theta) - spec[k].imag * np.sin(theta)
            )
        return out

    dense = series(np.linspace(0.0, beta, _NOISE_MAX_GRID, endpoint=False))
    peak = float(np.max(np.abs(dense)))
    # grid max underestimates the continuous sup by <= (pi*keep/grid)^2/2 ~ 1e-5
    scale = bound / (peak * (1.0 + 1e-4)) if peak > 0 else 0.0
    return scale * series(np.linspace(0.0, beta, n_t))


def kinetic_bound_check(
    f_path: SampledPath, sigma_g_sq: float, mu: float, quad_tol: float = 1e-6,
    in_regime: bool = True,
) -> BoundCheck:
    """Check <fdot^2> >= mu * sigma_g^2 / beta^2 for one path."""
    fdot = path_derivative(f_path)
    lhs = float(np.trapezoid(fdot**2, f_path.times) / f_path.beta)
    rhs = float(mu * sigma_g_sq / f_path.beta**2)
    margin = lhs - rhs
    return BoundCheck(
        lhs=lhs, rhs=rhs, margin=margin, satisfied=margin >= -quad_tol, in_regime=in_regime
    )


def check_prop1(
    n_trials: int,
    seed: int,
    beta: float = 5.0,
    n_t: int = 1024,
    n_modes: int = 10,
    delta_fraction: float = 20.0,
    quad_tol: float = 1e-6,
    mu: Optional[float] = None,
) -> list:
    """Kinetic-bound checks over a random Fourier ensemble.

    Each trial draws a base path g, sets the perturbation envelope
    Delta = sigma_g / delta_fraction, adds smooth noise bounded by Delta and
    checks the kinetic bound for f = g + eps. Trials with sigma_g < 10*Delta
    are flagged out-of-regime instead of being asserted. Trials are seeded
    independently as (seed, trial index).
    """
    if mu is None:
        mu = certified_mu()
    checks = []
    for trial in range(n_trials):
        rng = np.random.default_rng([seed, trial])
        g = random_fourier_path(rng, beta, n_modes=n_modes, n_t=n_t)
        sigma_g_sq = path_stats(g).variance
        delta = np.sqrt(max(sigma_g_sq, 0.0)) / delta_fraction
        eps = bounded_smooth_noise(rng, beta, delta, n_t)
        f = SampledPath(beta=beta, values=g.values + eps, periodic=True)
        in_regime = bool(sigma_g_sq >= (10.0 * delta) ** 2)
        checks.append(kinetic_bound_check(f, sigma_g_sq, mu, quad_tol, in_regime))
    return checks


@dataclass(frozen=True)
class MonotoneMap:
    """A differentiable map with a certified derivative lower bound."""

    fn: Callable[[np.ndarray], np.ndarray]
    deriv: Callable[[np.ndarray], np.ndarray]
    c_lower: float
    label: str = ""

    def __post_init__(self):
        if not self.c_lower > 0:
            raise PreconditionError(f"derivative lower bound must be > 0, got {self.c_lower}")


def identity_map() -> MonotoneMap:
    return MonotoneMap(fn=lambda x: x, deriv=lambda x: np.ones_like(x), c_lower=1.0,
                       label="identity")


def linear_map(slope: float) -> MonotoneMap:
    return MonotoneMap(
        fn=lambda x: slope * x,
        deriv=lambda x: np.full_like(x, slope),
        c_lower=slope,
        label=f"linear{slope:g}",
    )


def soft_sine_map(amplitude: float = 0.5) -> MonotoneMap:
    """x + amplitude*sin(x); derivative bounded below by 1 - amplitude."""
    if not 0 <= amplitude < 1:
        raise PreconditionError("amplitude must lie in [0, 1)")
    return MonotoneMap(
        fn=lambda x: x + amplitude * np.sin(x),
        deriv=lambda x: 1.0 + amplitude * np.cos(x),
        c_lower=1.0 - amplitude,
        label=f"soft_sine{amplitude:g}",
    )


def check_prop2(
    fmap: MonotoneMap,
    n_trials: int,
    seed: int,
    beta: float = 5.0,
    n_t: int = 1024,
    n_modes: int = 10,
    quad_tol: float = 1e-6,
) -> list:
    """Variance-composition checks: var(f o g) >= C^2 var(g) per trial.

    A trial whose realized range lets the derivative dip below the certified
    bound is flagged out-of-regime (ill-posed input) rather than asserted.
    """
    checks = []
    for trial in range(n_trials):
        rng = np.random.default_rng([seed, trial])
        g = random_fourier_path(rng, beta, n_modes=n_modes, n_t=n_t)
        sigma_g_sq = path_stats(g).variance
        composed = SampledPath(beta=beta, values=np.asarray(fmap.fn(g.values), dtype=float),
                               periodic=True)
        sigma_fog_sq = path_stats(composed).variance
        span = np.linspace(float(g.values.min()), float(g.values.max()), 2048)
        well_posed = bool(np.min(fmap.deriv(span)) >= fmap.c_lower - 1e-12)
        rhs = fmap.c_lower**2 * sigma_g_sq
        margin = sigma_fog_sq - rhs
        checks.append(
            BoundCheck(
                lhs=sigma_fog_sq,
                rhs=rhs,
                margin=margin,
                satisfied=margin >= -quad_tol,
                in_regime=well_posed,
            )
        )
    return checks
