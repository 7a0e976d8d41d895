"""Test for the absence of lead-lag effects.

The statistic is the maximum over a lag grid of the absolute
Hoffmann-Rosenbaum-Yoshida cross-covariance

    U(theta) = sum_{I, J} dX1(I) dX2(J) 1{I and J - theta overlap},

calibrated with a wild bootstrap that multiplies every increment by an
independent mean-zero, unit-variance weight (Rademacher by default).
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _accel, _kernels, timegrid
from .errors import DataError, ParameterError
from .rng import Seed, as_seed
from .stochastics import PathPair, PiecewiseConstant

QUANTILE_RULE = "order statistic ceil((R+1)(1-alpha)) of T*"


# ------------------------------------------------------------- intervals ---


@dataclass(frozen=True)
class IntervalPartition:
    """Contiguous half-open intervals ``(edges[i], edges[i+1]]``."""

    edges: np.ndarray

    def __len__(self):
        return self.edges.size - 1

    @property
    def intervals(self) -> list[tuple[float, float]]:
        e = self.edges
        return [(float(e[i]), float(e[i + 1])) for i in range(len(self))]

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)


def build_partition(times) -> IntervalPartition:
    t = np.asarray(times, dtype=float).ravel()
    if t.size < 2:
        raise DataError("need at least two observation times")
    if np.any(np.diff(t) <= 0):
        raise DataError("observation times must be strictly increasing")
    return IntervalPartition(t.copy())


def overlaps(I, J, eps: float = 0.0) -> bool:
    """Whether half-open ``(a, b]`` and ``(c, d]`` intersect.

    ``eps > 0`` additionally requires the intersection to be longer than
    ``eps``; meant for measured timestamps, never needed for constructed ones.
    """
    a, b = I
    c, d = J
    if not (a < b and c < d):
        raise DataError("intervals need left < right")
    return a + eps < d and c + eps < b


# -------------------------------------------------------------- lag grid ---


@dataclass(frozen=True)
class LagGrid:
    thetas: np.ndarray
    step: float | None = None

    def __post_init__(self):
        th = np.ascontiguousarray(self.thetas, dtype=float).ravel()
        if th.size == 0:
            raise ParameterError("lag grid must be nonempty")
        if np.any(np.diff(th) <= 0) or not np.all(np.isfinite(th)):
            raise ParameterError("lags must be finite and strictly increasing")
        object.__setattr__(self, "thetas", th)

    @classmethod
    def symmetric(cls, step: float, radius: float) -> "LagGrid":
        """``{k * step : |k * step| <= radius}``."""
        if step <= 0 or radius < 0:
            raise ParameterError("need step > 0 and radius >= 0")
        kmax = int(math.floor(radius / step + 1e-9))
        return cls(np.arange(-kmax, kmax + 1) * step, step)

    def __len__(self):
        return self.thetas.size

    def negated(self) -> "LagGrid":
        return LagGrid(-self.thetas[::-1], self.step)


# ------------------------------------------------------------- contrast ---


@dataclass(frozen=True)
class _Prepared:
    s: np.ndarray
    u: np.ndarray
    shifts: np.ndarray
    a: np.ndarray
    b: np.ndarray
    eps: float
    resolution: float | None


def prepare(path: PathPair, grid: LagGrid, eps: float = 0.0, exact: bool = True) -> _Prepared:
    """Kernel inputs, mapped onto an integer lattice when one exists.

    On the lattice every overlap decision is exact; otherwise raw float times
    are compared with tolerance ``eps`` (in time units).
    """
    t1, t2 = path.times1, path.times2
    if t1.size < 2 or t2.size < 2:
        raise DataError("each asset needs at least two observations")
    step = None
    if exact:
        step = timegrid.common_step(
            [t1, t2, grid.thetas], [path.scheme.resolution, grid.step]
        )
    a = np.diff(path.x1)
    b = np.diff(path.x2)
    if step is None:
        return _Prepared(t1, t2, grid.thetas, a, b, float(eps), None)
    f = float(step)
    conv = lambda v: timegrid.to_ticks(v, step).astype(float)
    return _Prepared(conv(t1), conv(t2), conv(grid.thetas), a, b, float(eps) / f, f)


def contrast(path: PathPair, grid: LagGrid, eps: float = 0.0, exact: bool = True) -> np.ndarray:
    """``U(theta)`` for every lag of ``grid`` by a two-pointer sweep.

    Costs ``O((n1 + n2) * len(grid))``. Lags for which no pair of intervals
    overlaps give 0 and raise a ``RuntimeWarning``.
    """
    p = prepare(path, grid, eps, exact)
    offsets, pi, pj = _kernels.build_pairs(p.s, p.u, p.shifts, p.eps)
    empty = np.diff(offsets) == 0
    if empty.any():
        warnings.warn(
            f"{int(empty.sum())} lag(s) shift every interval of asset 2 off asset 1",
            RuntimeWarning, stacklevel=2,
        )
    return _kernels.pair_contrast(offsets, pi, pj, p.a, p.b)


def contrast_naive(path: PathPair, grid: LagGrid, eps: float = 0.0, exact: bool = True) -> np.ndarray:
    """Reference ``O(n1 * n2 * len(grid))`` double loop over interval pairs."""
    p = prepare(path, grid, eps, exact)
    s, u = p.s.tolist(), p.u.tolist()
    a, b = p.a.tolist(), p.b.tolist()
    out = []
    for th in p.shifts.tolist():
        acc = 0.0
        for i in range(len(s) - 1):
            for j in range(len(u) - 1):
                if s[i] + p.eps < u[j + 1] - th and u[j] - th + p.eps < s[i + 1]:
                    acc += a[i] * b[j]
        out.append(acc)
    return np.array(out)


def test_statistic(values, n: int | None = None, scale: bool = False) -> float:
    """``max |U(theta)|``, times ``sqrt(n)`` when ``scale`` is set."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise DataError("empty contrast vector")
    t = float(np.max(np.abs(v)))
    if scale:
        if n is None or n <= 0:
            raise ParameterError("sqrt(n) scaling needs a positive n")
        t *= math.sqrt(n)
    return t


test_statistic.__test__ = False  # not a pytest test


# ------------------------------------------------------------ bootstrap ---

MULTIPLIERS = ("rademacher", "gaussian", "identity")


@dataclass(frozen=True)
class BootstrapConfig:
    """Wild bootstrap settings.

    ``multiplier="identity"`` sets every weight to +1; it exists so tests can
    check that the bootstrap reproduces the observed statistic.
    ``max_pairs`` caps the precomputed overlap list; above it each lag is
    re-swept inside the bootstrap loop instead.
    """

    R: int = 999
    multiplier: str = "rademacher"
    seed: Seed = field(default_factory=lambda: Seed(0))
    scale_by_sqrt_n: bool = False
    max_pairs: int = 20_000_000

    def __post_init__(self):
        if int(self.R) < 1:
            raise ParameterError("R must be >= 1")
        if self.multiplier not in MULTIPLIERS:
            raise ParameterError(f"multiplier must be one of {MULTIPLIERS}")
        object.__setattr__(self, "seed", as_seed(self.seed))

    def to_dict(self):
        d = asdict(self)
        d["seed"] = self.seed.to_dict()
        return d


def draw_multipliers(seed: Seed, R: int, n: int, kind: str) -> np.ndarray:
    """``(n, R)`` weights; column ``r`` is the r-th block of the stream.

    Draws are made replication by replication, so the first ``r`` columns do
    not depend on ``R``.
    """
    if kind == "identity":
        return np.ones((n, R))
    rng = seed.generator()
    if kind == "rademacher":
        w = rng.integers(0, 2, size=(R, n), dtype=np.int8).astype(float) * 2.0 - 1.0
    else:
        w = rng.standard_normal((R, n))
    return np.ascontiguousarray(w.T)


def _pairs_under_cap(p: _Prepared, cap: int):
    """Overlap pair list, or None when it would exceed ``cap`` entries."""
    total = int(_kernels.count_pairs(p.s, p.u, p.shifts, p.eps).sum())
    if total > cap:
        return None
    return _kernels.build_pairs(p.s, p.u, p.shifts, p.eps)


def _bootstrap_prepared(p: _Prepared, cfg: BootstrapConfig, n: int | None,
                        pairs=None) -> np.ndarray:
    R = int(cfg.R)
    w1 = draw_multipliers(cfg.seed.substream(1), R, p.a.size, cfg.multiplier)
    w2 = draw_multipliers(cfg.seed.substream(2), R, p.b.size, cfg.multiplier)
    aw = w1 * p.a[:, None]
    bw = w2 * p.b[:, None]
    if pairs is None:
        pairs = _pairs_under_cap(p, cfg.max_pairs)
    if pairs is None:
        tstar = _kernels.sweep_bootstrap(p.s, p.u, p.shifts, aw, bw, p.eps)
    else:
        tstar = _kernels.pair_bootstrap(*pairs, aw, bw)
    if cfg.scale_by_sqrt_n:
        if n is None or n <= 0:
            raise ParameterError("sqrt(n) scaling needs a positive n")
        tstar = tstar * math.sqrt(n)
    return tstar


def bootstrap_statistics(path: PathPair, grid: LagGrid, cfg: BootstrapConfig | None = None,
                         n: int | None = None, eps: float = 0.0) -> np.ndarray:
    """``T*(1..R)``: the statistic recomputed on multiplier-weighted increments."""
    cfg = cfg or BootstrapConfig()
    return _bootstrap_prepared(prepare(path, grid, eps), cfg, n)


def bootstrap_quantile(tstar, alpha: float) -> float:
    """Order statistic ``ceil((R+1)(1-alpha))`` of the bootstrap sample.

    Returns ``inf`` (with a warning) when that index exceeds ``R``.
    """
    if not 0 < alpha < 1:
        raise ParameterError("alpha must lie in (0, 1)")
    ts = np.sort(np.asarray(tstar, dtype=float))
    R = ts.size
    k = math.ceil((R + 1) * (1 - alpha) - 1e-9)
    if k > R:
        warnings.warn(f"alpha={alpha} too small for R={R}; quantile is +inf",
                      RuntimeWarning, stacklevel=2)
        return math.inf
    return float(ts[max(k, 1) - 1])


def p_value(t: float, tstar) -> float:
    """Fraction of bootstrap statistics strictly above ``t``."""
    ts = np.asarray(tstar, dtype=float)
    return float(np.count_nonzero(ts > t)) / ts.size


# ---------------------------------------------------------- diagnostics ---


def v_n(sigma1, sigma2, partitions, theta, n: int) -> float:
    """``n * sum_{I,J} (int_I sigma1^2)(int_J sigma2^2) 1{I ~ J - theta}``."""
    s1 = PiecewiseConstant.coerce(sigma1)
    s2 = PiecewiseConstant.coerce(sigma2)
    p1, p2 = partitions
    e1 = p1.edges if isinstance(p1, IntervalPartition) else np.asarray(p1, float)
    e2 = p2.edges if isinstance(p2, IntervalPartition) else np.asarray(p2, float)
    thetas = np.atleast_1d(np.asarray(theta, dtype=float))
    a = s1.sq_integral(e1[:-1], e1[1:])
    b = s2.sq_integral(e2[:-1], e2[1:])
    step = timegrid.common_step([e1, e2, thetas])
    if step is not None:
        conv = lambda v: timegrid.to_ticks(v, step).astype(float)
        s, u, sh = conv(e1), conv(e2), conv(thetas)
    else:
        s, u, sh = e1, e2, thetas
    out = n * _kernels.sweep_contrast(s, u, sh, a, b, 0.0)
    return float(out[0]) if np.ndim(theta) == 0 else out


def sigma_cross(sigma1, sigma2, T: float, theta: float) -> float:
    """``int_0^{T-theta} sigma1(t) sigma2(t+theta) dt`` (mirrored for theta < 0)."""
    s1 = PiecewiseConstant.coerce(sigma1)
    s2 = PiecewiseConstant.coerce(sigma2)
    theta = float(theta)
    if abs(theta) >= T:
        return 0.0
    if theta >= 0:
        # t runs over sigma1's clock, sigma2 is read at t + theta
        lo, hi, sh1, sh2 = 0.0, T - theta, 0.0, theta
    else:
        # t runs over sigma2's clock, sigma1 is read at t - theta
        lo, hi = 0.0, T + theta
        sh1, sh2 = -theta, 0.0
    cuts = np.concatenate([[lo, hi], s1.knots - sh1, s2.knots - sh2])
    cuts = np.unique(np.clip(cuts, lo, hi))
    mid = 0.5 * (cuts[:-1] + cuts[1:])
    return float(np.sum(s1(mid + sh1) * s2(mid + sh2) * np.diff(cuts)))


# -------------------------------------------------------------- report ---


@dataclass
class TestReport:
    thetas: np.ndarray
    contrast: np.ndarray
    no_overlap: np.ndarray
    statistic: float
    tstar: np.ndarray
    alpha: float
    quantile: float
    p_value: float
    reject: bool
    theta_hat: float
    n: int | None
    scaled: bool
    config: dict
    quantile_rule: str = QUANTILE_RULE

    __test__ = False

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "reject": self.reject,
            "alpha": self.alpha,
            "quantile": None if math.isinf(self.quantile) else self.quantile,
            "quantile_is_inf": math.isinf(self.quantile),
            "quantile_rule": self.quantile_rule,
            "theta_hat": self.theta_hat,
            "n": self.n,
            "scaled": self.scaled,
            "config": self.config,
            "contrast_table": [
                {"theta": float(t), "U": float(u), "no_overlap": bool(f)}
                for t, u, f in zip(self.thetas, self.contrast, self.no_overlap)
            ],
            "tstar": self.tstar.tolist(),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def lead_lag_test(path: PathPair, grid: LagGrid, cfg: BootstrapConfig | None = None,
                  alpha: float = 0.05, n: int | None = None, eps: float = 0.0) -> TestReport:
    """Run the full test: contrast, statistic, bootstrap, quantile and p-value.

    The null is rejected iff ``p_value <= alpha``.
    """
    cfg = cfg or BootstrapConfig()
    if not 0 < alpha < 1:
        raise ParameterError("alpha must lie in (0, 1)")
    p = prepare(path, grid, eps)
    no_overlap = _kernels.count_pairs(p.s, p.u, p.shifts, p.eps) == 0
    pairs = _pairs_under_cap(p, cfg.max_pairs)
    if pairs is None:
        u = _kernels.sweep_contrast(p.s, p.u, p.shifts, p.a, p.b, p.eps)
    else:
        u = _kernels.pair_contrast(*pairs, p.a, p.b)
    stat = test_statistic(u, n, cfg.scale_by_sqrt_n)
    tstar = _bootstrap_prepared(p, cfg, n, pairs)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        q = bootstrap_quantile(tstar, alpha)
    pv = p_value(stat, tstar)
    config = {
        "bootstrap": cfg.to_dict(),
        "grid": {"size": len(grid), "min": float(grid.thetas[0]),
                 "max": float(grid.thetas[-1]), "step": grid.step},
        "scheme": path.scheme.to_dict(),
        "eps": eps,
        "lattice_step": p.resolution,
        "backend": _accel.backend(),
    }
    return TestReport(
        thetas=grid.thetas.copy(), contrast=u, no_overlap=no_overlap,
        statistic=stat, tstar=tstar, alpha=alpha, quantile=q, p_value=pv,
        reject=pv <= alpha, theta_hat=float(grid.thetas[int(np.argmax(np.abs(u)))]),
        n=n, scaled=cfg.scale_by_sqrt_n, config=config,
    )
