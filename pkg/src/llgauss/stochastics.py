"""Simulation of lead-lag Brownian pairs and of Gaussian maxima.

The lead-lag model is

    X1(t) = x1 + int_0^t sigma1 dB1,      X2(t) = x2 + sigma2 * B2(t - lag)

with ``(B1, B2)`` a two-sided bivariate Brownian motion of correlation
``rho``. Paths are generated on a single driving lattice that contains every
sample time and every lag-shifted sample time exactly, so no interpolation
ever takes place.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from . import timegrid
from .errors import ConfigurationError, DataError, NotPSDError, ParameterError
from .rng import Seed, as_seed

PSD_REL_TOL = 1e-8
# driving cells per path; beyond this the lattice is treated as unusable
MAX_DRIVING_CELLS = 50_000_000
SYM_REL_TOL = 1e-10


class PiecewiseConstant:
    """Right-continuous step function.

    ``values[0]`` applies on ``(-inf, knots[0])``, ``values[k]`` on
    ``[knots[k-1], knots[k])`` and ``values[-1]`` on ``[knots[-1], inf)``.
    A scalar is the constant function.
    """

    def __init__(self, knots=(), values=(1.0,)):
        self.knots = np.asarray(knots, dtype=float).ravel()
        self.values = np.asarray(values, dtype=float).ravel()
        if self.values.size != self.knots.size + 1:
            raise ParameterError("need len(values) == len(knots) + 1")
        if np.any(np.diff(self.knots) <= 0):
            raise ParameterError("knots must be strictly increasing")
        if not np.all(np.isfinite(self.values)) or np.any(self.values < 0):
            raise ParameterError("volatility values must be finite and >= 0")

    @classmethod
    def coerce(cls, sigma) -> "PiecewiseConstant":
        if isinstance(sigma, cls):
            return sigma
        return cls((), (float(sigma),))

    @property
    def is_constant(self) -> bool:
        return self.knots.size == 0

    def __call__(self, t):
        idx = np.searchsorted(self.knots, np.asarray(t, dtype=float), side="right")
        return self.values[idx]

    def sq_integral(self, a, b):
        """Vectorised ``int_a^b sigma(t)^2 dt`` for ``a <= b``."""
        return self._integral(self.values**2, a, b)

    def _integral(self, vals, a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        return self._antideriv(vals, b) - self._antideriv(vals, a)

    def _antideriv(self, vals, x):
        # antiderivative anchored at the first knot (or 0 for constants)
        k = self.knots
        if k.size == 0:
            return vals[0] * x
        cum = np.concatenate(([0.0], np.cumsum(vals[1:-1] * np.diff(k))))
        idx = np.searchsorted(k, x, side="right")
        left = np.where(idx == 0, k[0], k[np.maximum(idx - 1, 0)])
        base = np.where(idx == 0, 0.0, cum[np.maximum(idx - 1, 0)])
        return base + vals[idx] * (x - left)

    def to_dict(self):
        return {"knots": self.knots.tolist(), "values": self.values.tolist()}


@dataclass(frozen=True)
class LeadLagModel:
    x0_1: float = 0.0
    x0_2: float = 0.0
    sigma1: PiecewiseConstant | float = 1.0
    sigma2: PiecewiseConstant | float = 1.0
    rho: float = 0.0
    theta: float = 0.0
    T: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "sigma1", PiecewiseConstant.coerce(self.sigma1))
        object.__setattr__(self, "sigma2", PiecewiseConstant.coerce(self.sigma2))
        if not abs(self.rho) < 1:
            raise ParameterError(f"|rho| must be < 1, got {self.rho}")
        if not self.T > 0:
            raise ParameterError("T must be positive")

    def to_dict(self):
        return {
            "x0_1": self.x0_1, "x0_2": self.x0_2,
            "sigma1": self.sigma1.to_dict(), "sigma2": self.sigma2.to_dict(),
            "rho": self.rho, "theta": self.theta, "T": self.T,
        }


@dataclass(frozen=True)
class SamplingScheme:
    """Observation times of both assets.

    ``resolution`` is a lattice step every time is a multiple of, when known
    (the sampling step for equidistant schemes, the base step for
    subsamples). It is only a hint for exact arithmetic downstream.
    """

    times1: np.ndarray
    times2: np.ndarray
    label: str = "custom"
    params: dict = field(default_factory=dict)
    T: float | None = None
    resolution: float | None = None

    def __post_init__(self):
        for name in ("times1", "times2"):
            t = np.ascontiguousarray(getattr(self, name), dtype=float)
            if t.ndim != 1 or t.size < 2:
                raise DataError(f"{name}: need at least two observation times")
            if np.any(np.diff(t) <= 0):
                raise DataError(f"{name}: times must be strictly increasing")
            if t[0] < 0 or (self.T is not None and t[-1] > self.T):
                raise DataError(f"{name}: times must lie in [0, T]")
            t.setflags(write=False)
            object.__setattr__(self, name, t)

    def to_dict(self):
        return {
            "label": self.label, "params": self.params, "T": self.T,
            "resolution": self.resolution,
            "n1": int(self.times1.size), "n2": int(self.times2.size),
        }


@dataclass(frozen=True)
class PathPair:
    scheme: SamplingScheme
    x1: np.ndarray
    x2: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        x1 = np.ascontiguousarray(self.x1, dtype=float)
        x2 = np.ascontiguousarray(self.x2, dtype=float)
        if x1.shape != self.scheme.times1.shape or x2.shape != self.scheme.times2.shape:
            raise DataError("value arrays must match the scheme's time arrays")
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "x2", x2)

    @property
    def times1(self):
        return self.scheme.times1

    @property
    def times2(self):
        return self.scheme.times2

    def swapped(self) -> "PathPair":
        sch = self.scheme
        flipped = SamplingScheme(sch.times2, sch.times1, sch.label, sch.params, sch.T, sch.resolution)
        return PathPair(flipped, self.x2, self.x1, dict(self.meta))

    def scaled(self, c1: float = 1.0, c2: float = 1.0) -> "PathPair":
        return PathPair(self.scheme, c1 * self.x1, c2 * self.x2, dict(self.meta))


# ---------------------------------------------------------------- schemes ---


def _equidistant(h: float, T: float) -> np.ndarray:
    n = int(np.floor(T / h + 1e-9))
    return np.arange(n + 1) * h


def make_scheme(kind: str, params: dict | None = None, T: float = 1.0, seed=None) -> SamplingScheme:
    """Build a sampling scheme.

    Parameters
    ----------
    kind : {"equidistant", "subsample"}
        ``equidistant`` takes ``h`` and gives both assets ``{0, h, ...,
        floor(T/h) h}``. ``subsample`` takes ``m`` and ``base_step`` and draws
        ``m`` points without replacement from the base grid, independently
        per asset; time 0 is always kept.
    seed : Seed or int
        Only used by ``subsample``; asset ``k`` uses substream ``k``.
    """
    params = dict(params or {})
    if kind in ("equidistant", "sync", "synchronous"):
        h = float(params["h"])
        if not 0 < h <= T:
            raise ParameterError(f"need 0 < h <= T, got h={h}")
        t = _equidistant(h, T)
        return SamplingScheme(t, t.copy(), "synchronous-equidistant", {"h": h}, T, h)
    if kind in ("subsample", "nonsync", "nonsynchronous"):
        m = int(params.get("m", 300))
        step = float(params.get("base_step", 1e-3))
        base = _equidistant(step, T)
        if not 2 <= m <= base.size:
            raise ParameterError(f"need 2 <= m <= {base.size} (base grid size), got m={m}")
        seed = as_seed(seed)
        times = []
        for asset in (1, 2):
            rng = seed.substream(asset).generator()
            pick = rng.choice(base.size - 1, size=m - 1, replace=False) + 1
            times.append(base[np.concatenate(([0], np.sort(pick)))])
        return SamplingScheme(
            times[0], times[1], "nonsynchronous-subsample",
            {"m": m, "base_step": step}, T, step,
        )
    raise ParameterError(f"unknown scheme kind {kind!r}")


# ------------------------------------------------------------- simulation ---


def _driving_step(model: LeadLagModel, scheme: SamplingScheme) -> Fraction:
    breaks = np.concatenate([model.sigma1.knots, model.sigma2.knots, [model.theta]])
    hints = [scheme.resolution, model.theta if model.theta else None]
    step = timegrid.common_step(
        [scheme.times1, scheme.times2, breaks, scheme.times2 - model.theta], hints
    )
    if step is None:
        raise ConfigurationError(
            "sample times, lag and volatility breakpoints are not commensurate; "
            "the lag-shifted times cannot be represented on a driving grid"
        )
    return step


def simulate_leadlag(model: LeadLagModel, scheme: SamplingScheme, seed=None) -> PathPair:
    """Simulate ``model`` at the times of ``scheme``.

    Substream 1 of ``seed`` drives ``B1``, substream 2 drives the independent
    part ``W`` of ``B2 = rho B1 + sqrt(1 - rho^2) W``.
    """
    seed = as_seed(seed)
    T = model.T
    if scheme.T is not None and scheme.T > T + 1e-12:
        raise ConfigurationError("scheme horizon exceeds model horizon")
    for t in (scheme.times1, scheme.times2):
        if t[-1] > T * (1 + 1e-12):
            raise ConfigurationError("sample time beyond model horizon")
    step = _driving_step(model, scheme)
    d = float(step)
    k1 = timegrid.to_ticks(scheme.times1, step)
    k2 = timegrid.to_ticks(scheme.times2, step)
    lag = int(timegrid.to_ticks([model.theta], step)[0])
    # B1 is read at [0, T], B2 at [-lag, T - lag], plus one cell of margin
    kT = int(np.ceil(T / d - 1e-9))
    lo = min(0, -lag) - 1
    hi = max(kT, kT - lag) + 1
    ncell = hi - lo
    if ncell > MAX_DRIVING_CELLS:
        raise ConfigurationError(
            f"driving grid step {d:.3g} needs {ncell} cells; sample times and lag are "
            "only commensurate on an impractically fine grid"
        )
    z1 = seed.substream(1).generator().standard_normal(ncell)
    w = seed.substream(2).generator().standard_normal(ncell)
    # cell c covers (c d, (c+1) d] in driving time
    cells = np.arange(lo, hi)
    mid = (cells + 0.5) * d
    s1 = model.sigma1(mid)
    s2 = model.sigma2(mid + model.theta)  # X2 time = driving time + lag
    sq = np.sqrt(d)
    rho = model.rho
    e1 = s1 * sq * z1
    e2 = s2 * sq * (rho * z1 + np.sqrt(1.0 - rho * rho) * w)
    c1 = np.concatenate(([0.0], np.cumsum(e1)))
    c2 = np.concatenate(([0.0], np.cumsum(e2)))
    # c[k - lo] is the sum over cells lo..k-1; anchor at driving time 0
    zero = -lo
    x1 = model.x0_1 + (c1[k1 - lo] - c1[zero])
    x2 = model.x0_2 + (c2[k2 - lag - lo] - c2[zero])
    meta = {"seed": seed.to_dict(), "model": model.to_dict(), "driving_step": d}
    return PathPair(scheme, x1, x2, meta)


# --------------------------------------------------------- Gaussian maxima ---


def check_symmetric(m, name="matrix") -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DataError(f"{name} must be square, got shape {m.shape}")
    scale = np.max(np.abs(m)) if m.size else 0.0
    if np.max(np.abs(m - m.T), initial=0.0) > SYM_REL_TOL * scale:
        raise DataError(f"{name} is not symmetric")
    return 0.5 * (m + m.T)


def psd_factor(cov) -> np.ndarray:
    """``L`` with ``L @ L.T == cov`` from the symmetric eigendecomposition.

    Eigenvalues in ``[-1e-8 * lambda_max, 0)`` are clipped to zero; anything
    more negative is rejected.
    """
    cov = check_symmetric(cov, "covariance")
    lam, vec = np.linalg.eigh(cov)
    top = max(lam[-1], 0.0) if lam.size else 0.0
    if lam.size and lam[0] < -PSD_REL_TOL * top:
        raise NotPSDError(f"matrix is not PSD (min eigenvalue {lam[0]:.3g})")
    return vec * np.sqrt(np.clip(lam, 0.0, None))


def sample_gaussian_max(cov, n_draws: int, seed=None, two_sided: bool = False,
                        chunk: int = 1 << 16) -> np.ndarray:
    """``n_draws`` i.i.d. copies of ``max_j Z_j`` (or ``max_j |Z_j|``), ``Z ~ N(0, cov)``."""
    L = psd_factor(cov)
    d = L.shape[0]
    rng = as_seed(seed).generator()
    out = np.empty(int(n_draws))
    for start in range(0, out.size, chunk):
        stop = min(out.size, start + chunk)
        z = rng.standard_normal((stop - start, d)) @ L.T
        out[start:stop] = (np.abs(z) if two_sided else z).max(axis=1)
    return out


# ---------------------------------------------------------------------- I/O ---


def write_path_csv(path: PathPair, csv_path, sidecar: bool = True) -> None:
    """CSV with columns ``asset,time,value`` plus a JSON sidecar of metadata."""
    csv_path = Path(csv_path)
    with csv_path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["asset", "time", "value"])
        for asset, t, x in ((1, path.times1, path.x1), (2, path.times2, path.x2)):
            for ti, xi in zip(t, x):
                w.writerow([asset, repr(float(ti)), repr(float(xi))])
    if sidecar:
        meta = {"scheme": path.scheme.to_dict(), **path.meta}
        csv_path.with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True))


def read_path_csv(csv_path, T: float | None = None) -> PathPair:
    """Read ``asset,time,value`` rows (``price`` is accepted for ``value``)."""
    csv_path = Path(csv_path)
    with csv_path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError(f"{csv_path}: empty file")
        fields = [f.strip().lower() for f in reader.fieldnames]
        vcol = "value" if "value" in fields else "price" if "price" in fields else None
        if "asset" not in fields or "time" not in fields or vcol is None:
            raise DataError(f"{csv_path}: need columns asset,time,value (or price)")
        rows = {1: [], 2: []}
        for raw in reader:
            rec = {k.strip().lower(): v for k, v in raw.items()}
            try:
                asset = int(float(rec["asset"]))
                rows[asset].append((float(rec["time"]), float(rec[vcol])))
            except (KeyError, ValueError) as exc:
                raise DataError(f"{csv_path}: bad row {raw}") from exc
    arrs = []
    for asset in (1, 2):
        r = np.array(sorted(rows[asset]), dtype=float).reshape(-1, 2)
        arrs.append(r)
    meta = {}
    side = csv_path.with_suffix(".json")
    resolution = None
    if side.exists():
        meta = json.loads(side.read_text())
        resolution = meta.get("scheme", {}).get("resolution")
        T = T if T is not None else meta.get("scheme", {}).get("T")
    scheme = SamplingScheme(arrs[0][:, 0], arrs[1][:, 0], "ingested", {}, T, resolution)
    return PathPair(scheme, arrs[0][:, 1], arrs[1][:, 1], meta)


def lagged_increment_corr(path: PathPair, shift: int = 0) -> float:
    """Sample correlation of ``dX2[j]`` with ``dX1[j - shift]`` (synchronous data)."""
    a = np.diff(path.x1)
    b = np.diff(path.x2)
    if shift > 0:
        a, b = a[:-shift], b[shift:]
    elif shift < 0:
        a, b = a[-shift:], b[:shift]
    return float(np.corrcoef(a, b)[0, 1])


__all__: Sequence[str] = [
    "PiecewiseConstant", "LeadLagModel", "SamplingScheme", "PathPair", "Seed",
    "make_scheme", "simulate_leadlag", "sample_gaussian_max", "psd_factor",
    "check_symmetric", "write_path_csv", "read_path_csv", "lagged_increment_corr",
]
