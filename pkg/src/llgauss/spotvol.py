"""Kernel spot-volatility estimator with uniform confidence bands.

For equidistant observations ``t_i = T i / n`` the estimator is

    sigma2_hat(t) = sum_i K_h(t_{i-1} - t) (X_{t_i} - X_{t_{i-1}})^2

and the band at level ``1 - alpha`` is
``[sigma2_hat / (1 + s_n q), sigma2_hat / (1 - s_n q)]``, where ``q`` is a
Monte Carlo quantile of ``sup_t |Z_n(t)|`` for the parameter-free Gaussian
analog ``Z_n(t) = s_n(t)^{-1} sum_i K_h(t_{i-1} - t) z_i``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy import sparse

from .errors import ConfigurationError, DataError, ParameterError
from .leadlag import bootstrap_quantile
from .rng import Seed, as_seed
from .stochastics import PiecewiseConstant


@dataclass(frozen=True)
class Kernel:
    name: str
    fn: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    support: float
    int_sq: Fraction

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(np.abs(x) <= self.support, self.fn(x), 0.0)


KERNELS = {
    "epanechnikov": Kernel("epanechnikov", lambda x: 0.75 * (1.0 - x * x), 1.0, Fraction(3, 5)),
    "triangular": Kernel("triangular", lambda x: 1.0 - np.abs(x), 1.0, Fraction(2, 3)),
    "quartic": Kernel("quartic", lambda x: (15.0 / 16.0) * (1.0 - x * x) ** 2, 1.0, Fraction(5, 7)),
}


def get_kernel(kernel) -> Kernel:
    if isinstance(kernel, Kernel):
        return kernel
    try:
        return KERNELS[str(kernel).lower()]
    except KeyError:
        raise ParameterError(f"unknown kernel {kernel!r}; choose from {sorted(KERNELS)}") from None


@dataclass(frozen=True)
class SpotVolConfig:
    """Band settings.

    ``a_n`` defaults to twice the kernel half-width ``support * h`` and the
    evaluation step ``delta`` to ``h / 20``.
    """

    h: float
    kernel: Kernel | str = "epanechnikov"
    a_n: float | None = None
    delta: float | None = None
    alpha: float = 0.05
    R: int = 10_000
    seed: Seed = field(default_factory=lambda: Seed(0))
    T: float = 1.0

    def __post_init__(self):
        k = get_kernel(self.kernel)
        object.__setattr__(self, "kernel", k)
        object.__setattr__(self, "seed", as_seed(self.seed))
        if self.a_n is None:
            object.__setattr__(self, "a_n", 2.0 * k.support * self.h)
        if self.delta is None:
            object.__setattr__(self, "delta", self.h / 20.0)
        if not 0 < self.h < self.T / 2:
            raise ParameterError(f"need 0 < h < T/2, got h={self.h}")
        if not self.a_n > self.h * k.support:
            raise ParameterError("boundary trim a_n must exceed the kernel half-width h * support")
        if not 2 * self.a_n < self.T:
            raise ParameterError("boundary trim leaves no evaluation window")
        if not 0 < self.delta <= self.h / 20 * (1 + 1e-12):
            raise ParameterError("evaluation step must satisfy 0 < delta <= h/20")
        if not 0 < self.alpha < 1:
            raise ParameterError("alpha must lie in (0, 1)")
        if int(self.R) < 1:
            raise ParameterError("R must be >= 1")

    def eval_grid(self) -> np.ndarray:
        return eval_grid(self.a_n, self.T, self.delta)

    def to_dict(self):
        return {
            "h": self.h, "kernel": self.kernel.name, "a_n": self.a_n, "delta": self.delta,
            "alpha": self.alpha, "R": int(self.R), "seed": self.seed.to_dict(), "T": self.T,
        }


@dataclass
class BandResult:
    t: np.ndarray
    sigma2_hat: np.ndarray
    s_n: np.ndarray
    quantile: float
    lower: np.ndarray
    upper: np.ndarray
    valid: np.ndarray
    config: dict = field(default_factory=dict)

    def covers(self, truth) -> bool:
        """Whether ``truth`` (array on ``t``) lies in the band at every valid point."""
        truth = np.asarray(truth, dtype=float)
        v = self.valid
        return bool(np.all((truth[v] >= self.lower[v]) & (truth[v] <= self.upper[v])))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "sigma2_hat", "s_n", "lower", "upper", "valid"])
            for row in zip(self.t, self.sigma2_hat, self.s_n, self.lower, self.upper, self.valid):
                w.writerow([repr(float(x)) for x in row[:5]] + [str(bool(row[5])).lower()])


# ------------------------------------------------------------- helpers ---


def eval_grid(a_n: float, T: float, delta: float) -> np.ndarray:
    m = int(math.floor((T - 2 * a_n) / delta + 1e-9))
    return a_n + np.arange(m + 1) * delta


def check_equidistant(times) -> tuple[int, float]:
    """Return ``(n, T)`` for times ``T i / n``; raise DataError otherwise."""
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise DataError("need at least two observation times")
    n = t.size - 1
    T = float(t[-1])
    if t[0] != 0.0 or T <= 0:
        raise DataError("observation times must run from 0 to T > 0")
    if np.max(np.abs(t - T * np.arange(n + 1) / n)) > 1e-9 * max(T, 1.0):
        raise DataError("spot-volatility estimation needs equidistant times T*i/n")
    return n, T


def kernel_weights(t_eval, left_times, h: float, kernel) -> sparse.csr_matrix:
    """Sparse ``W[j, i] = K_h(left_times[i] - t_eval[j])``, left times sorted."""
    k = get_kernel(kernel)
    t_eval = np.asarray(t_eval, dtype=float)
    left = np.asarray(left_times, dtype=float)
    lo = np.searchsorted(left, t_eval - k.support * h, side="left")
    hi = np.searchsorted(left, t_eval + k.support * h, side="right")
    counts = hi - lo
    indptr = np.concatenate(([0], np.cumsum(counts)))
    rows = np.repeat(np.arange(t_eval.size), counts)
    cols = np.arange(indptr[-1]) - np.repeat(indptr[:-1], counts) + np.repeat(lo, counts)
    data = k((left[cols] - t_eval[rows]) / h) / h
    return sparse.csr_matrix((data, cols, indptr), shape=(t_eval.size, left.size))


def _s_from_weights(W: sparse.csr_matrix, dt: float) -> np.ndarray:
    sq = np.asarray(W.multiply(W).sum(axis=1)).ravel()
    return np.sqrt(2.0 * dt * dt * sq)


# ---------------------------------------------------------- operations ---


def spot_estimate(times, x, cfg: SpotVolConfig, t_eval=None) -> np.ndarray:
    """Kernel estimate of ``sigma^2`` on ``cfg.eval_grid()`` (or ``t_eval``)."""
    check_equidistant(times)
    times = np.asarray(times, dtype=float)
    dx = np.diff(np.asarray(x, dtype=float))
    t_eval = cfg.eval_grid() if t_eval is None else np.asarray(t_eval, dtype=float)
    W = kernel_weights(t_eval, times[:-1], cfg.h, cfg.kernel)
    return W @ (dx * dx)


def s_n(t, h: float, kernel, times) -> np.ndarray:
    """Standard-error proxy ``sqrt(2 dt^2 sum_i K_h(t_{i-1} - t)^2)``, ``dt = T/n``.

    With ``T = 1`` this is ``sqrt((2/n^2) sum_i K_h(t_{i-1} - t)^2)``.
    """
    n, T = check_equidistant(times)
    times = np.asarray(times, dtype=float)
    W = kernel_weights(np.atleast_1d(t), times[:-1], h, kernel)
    out = _s_from_weights(W, T / n)
    return out if np.ndim(t) else float(out[0])


def simulate_sup_gaussian_analog(n: int, h: float, kernel, a_n: float, T: float, delta: float,
                                 R: int, seed=None, chunk: int = 512) -> np.ndarray:
    """``R`` draws of ``sup_{t in grid} |Z_n(t)|`` over ``[a_n, T - a_n]``."""
    if delta <= 0 or n < 1 or R < 1:
        raise ParameterError("need delta > 0, n >= 1, R >= 1")
    times = T * np.arange(n + 1) / n
    grid = eval_grid(a_n, T, delta)
    if grid.size == 0:
        raise ConfigurationError("empty evaluation grid")
    W = kernel_weights(grid, times[:-1], h, kernel)
    dt = T / n
    s = _s_from_weights(W, dt)
    if np.any(s == 0):
        raise ConfigurationError("kernel window at some evaluation time contains no sample point")
    rng = as_seed(seed).generator()
    out = np.empty(int(R))
    scale = math.sqrt(2.0) * dt
    for start in range(0, out.size, chunk):
        stop = min(out.size, start + chunk)
        # draws stacked row-wise so that draw r never depends on the chunking
        z = rng.standard_normal((stop - start, n)) * scale
        Z = (W @ z.T) / s[:, None]
        out[start:stop] = np.abs(Z).max(axis=0)
    return out


def band_limits(sigma2_hat, s, q):
    """Apply the band formula; returns ``(lower, upper, valid)``."""
    sigma2_hat = np.asarray(sigma2_hat, dtype=float)
    sq = np.asarray(s, dtype=float) * q
    valid = 1.0 - sq > 0
    lower = sigma2_hat / (1.0 + sq)
    with np.errstate(divide="ignore", invalid="ignore"):
        upper = np.where(valid, sigma2_hat / (1.0 - sq), np.inf)
    return lower, upper, valid


def gaussian_analog_quantile(n: int, cfg: SpotVolConfig) -> tuple[float, np.ndarray]:
    sups = simulate_sup_gaussian_analog(
        n, cfg.h, cfg.kernel, cfg.a_n, cfg.T, cfg.delta, cfg.R, cfg.seed
    )
    return bootstrap_quantile(sups, cfg.alpha), sups


def uniform_band(times, x, cfg: SpotVolConfig, quantile: float | None = None) -> BandResult:
    """Uniform ``1 - alpha`` band for ``sigma^2`` on ``[a_n, T - a_n]``.

    ``quantile`` can be passed to reuse a previously simulated ``q``; it only
    depends on ``n`` and ``cfg``.
    """
    n, T = check_equidistant(times)
    if abs(T - cfg.T) > 1e-9 * max(T, 1.0):
        raise ConfigurationError(f"data horizon {T} differs from configured T={cfg.T}")
    times = np.asarray(times, dtype=float)
    grid = cfg.eval_grid()
    W = kernel_weights(grid, times[:-1], cfg.h, cfg.kernel)
    s = _s_from_weights(W, T / n)
    if np.any(s == 0):
        raise ConfigurationError("kernel window at some evaluation time contains no sample point")
    dx = np.diff(np.asarray(x, dtype=float))
    est = W @ (dx * dx)
    q = gaussian_analog_quantile(n, cfg)[0] if quantile is None else float(quantile)
    lower, upper, valid = band_limits(est, s, q)
    return BandResult(grid, est, s, q, lower, upper, valid, {**cfg.to_dict(), "n": n})


def simulate_spot_path(sigma, n: int, T: float = 1.0, seed=None, x0: float = 0.0):
    """Equidistant observations of ``x0 + int sigma dB`` with deterministic ``sigma``."""
    sig = PiecewiseConstant.coerce(sigma)
    times = T * np.arange(n + 1) / n
    sd = np.sqrt(sig.sq_integral(times[:-1], times[1:]))
    z = as_seed(seed).generator().standard_normal(n)
    return times, x0 + np.concatenate(([0.0], np.cumsum(sd * z)))


def band_coverage(sigma, n: int, cfg: SpotVolConfig, n_datasets: int, seed=None) -> float:
    """Fraction of simulated datasets whose band contains ``sigma^2`` everywhere."""
    sig = PiecewiseConstant.coerce(sigma)
    seed = as_seed(seed)
    q, _ = gaussian_analog_quantile(n, cfg)
    truth = sig(cfg.eval_grid()) ** 2
    hits = 0
    for k in range(n_datasets):
        times, x = simulate_spot_path(sig, n, cfg.T, seed.substream(k))
        hits += uniform_band(times, x, cfg, quantile=q).covers(truth)
    return hits / n_datasets


def undersmoothing_diagnostics(n: int, h: float, gamma: float) -> dict:
    """Finite-sample values of the two bandwidth conditions; flags when > 1."""
    logn = math.log(n)
    bias = n * h ** (1 + 2 * gamma) * logn
    noise = logn**6 / (n * h)
    return {"bias_term": bias, "noise_term": noise,
            "bias_warning": bias > 1, "noise_warning": noise > 1}
