"""Moment diagnostics for maxima of centered Gaussian quadratic forms.

A family ``F_k = xi' A_k xi - E[xi' A_k xi]`` with ``xi ~ N(0, Sigma)`` is
handled through its whitened coefficient matrices
``Gamma_k = Sigma^{1/2} A_k Sigma^{1/2}``, for which, with ``eta`` standard
normal, ``F_k = eta' Gamma_k eta - tr(Gamma_k)`` and

    E[F_k F_l]              = 2 tr(Gamma_k Gamma_l)
    E[F_k^4] - 3 E[F_k^2]^2 = 48 tr(Gamma_k^4).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse

from .errors import DataError, NotPSDError, ParameterError
from .rng import as_seed
from .stochastics import check_symmetric, psd_factor


def psd_sqrt(sigma) -> np.ndarray:
    """Symmetric PSD square root (negative round-off eigenvalues clipped)."""
    sigma = check_symmetric(sigma, "Sigma")
    lam, vec = np.linalg.eigh(sigma)
    top = max(lam[-1], 0.0)
    if lam[0] < -1e-8 * top:
        raise NotPSDError(f"Sigma is not PSD (min eigenvalue {lam[0]:.3g})")
    return (vec * np.sqrt(np.clip(lam, 0.0, None))) @ vec.T


def whiten(sigma, A_list) -> list[np.ndarray]:
    """``Gamma_k = Sigma^{1/2} A_k Sigma^{1/2}``."""
    root = psd_sqrt(sigma)
    out = []
    for k, A in enumerate(A_list):
        A = check_symmetric(A, f"A[{k}]")
        if A.shape != root.shape:
            raise DataError(f"A[{k}] has shape {A.shape}, Sigma has {root.shape}")
        G = root @ A @ root
        out.append(0.5 * (G + G.T))
    return out


@dataclass
class QuadFormSpec:
    """Whitened coefficient matrices of a quadratic-form family."""

    gammas: list = field(default_factory=list)

    def __post_init__(self):
        mats = [check_symmetric(g, f"Gamma[{k}]") for k, g in enumerate(self.gammas)]
        if not mats:
            raise DataError("need at least one coefficient matrix")
        N = mats[0].shape[0]
        if any(m.shape != (N, N) for m in mats):
            raise DataError("all coefficient matrices must share one size")
        self.gammas = mats

    @classmethod
    def from_sigma(cls, sigma, A_list) -> "QuadFormSpec":
        return cls(whiten(sigma, A_list))

    @property
    def d(self) -> int:
        return len(self.gammas)

    @property
    def N(self) -> int:
        return self.gammas[0].shape[0]

    @classmethod
    def from_json(cls, path) -> "QuadFormSpec":
        """``{"gammas": [...]}`` or ``{"sigma": ..., "A": [...]}``; matrices
        inline as nested lists or as paths to dense CSV files."""
        path = Path(path)
        doc = json.loads(path.read_text())
        load = lambda m: read_matrix(path.parent / m) if isinstance(m, str) else np.asarray(m, float)
        if "gammas" in doc:
            return cls([load(g) for g in doc["gammas"]])
        if "sigma" in doc and "A" in doc:
            return cls.from_sigma(load(doc["sigma"]), [load(a) for a in doc["A"]])
        raise DataError(f"{path}: expected keys 'gammas' or 'sigma' + 'A'")


def read_matrix(path) -> np.ndarray:
    try:
        m = np.loadtxt(path, delimiter=",", ndmin=2)
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read matrix from {path}: {exc}") from exc
    return m


# ------------------------------------------------------------ moments ---


def qf_variance(gamma) -> float:
    """``E[F^2] = 2 ||Gamma||_F^2``."""
    g = check_symmetric(gamma, "Gamma")
    return 2.0 * float(np.sum(g * g))


def qf_covariance(gamma_k, gamma_l) -> float:
    """``E[F_k F_l] = 2 tr(Gamma_k Gamma_l)``."""
    a = check_symmetric(gamma_k, "Gamma_k")
    b = check_symmetric(gamma_l, "Gamma_l")
    if a.shape != b.shape:
        raise DataError("dimension mismatch")
    # tr(AB) = sum(A * B) for symmetric B
    return 2.0 * float(np.sum(a * b))


def qf_covariance_matrix(spec: QuadFormSpec) -> np.ndarray:
    flat = np.stack([g.ravel() for g in spec.gammas])
    return 2.0 * flat @ flat.T


def trace_fourth(gamma) -> float:
    """``tr(Gamma^4)`` as ``||Gamma^2||_F^2``."""
    g = check_symmetric(gamma, "Gamma")
    g2 = g @ g
    return float(np.sum(g2 * g2))


def trace_fourth_eig(gamma) -> float:
    """``tr(Gamma^4)`` as the sum of fourth powers of eigenvalues."""
    lam = np.linalg.eigvalsh(check_symmetric(gamma, "Gamma"))
    return float(np.sum(lam**4))


def qf_fourth_cumulant(gamma) -> float:
    """``E[F^4] - 3 E[F^2]^2 = 48 tr(Gamma^4)``; never negative."""
    return 48.0 * trace_fourth(gamma)


def spectral_norm(gamma) -> float:
    lam = np.linalg.eigvalsh(check_symmetric(gamma, "Gamma"))
    return float(np.max(np.abs(lam))) if lam.size else 0.0


# ---------------------------------------------------------- influence ---


def influence(gamma, i: int) -> float:
    """Squared norm of row ``i``."""
    g = check_symmetric(gamma, "Gamma")
    if not 0 <= i < g.shape[0]:
        raise ParameterError(f"index {i} out of range for N={g.shape[0]}")
    return float(np.sum(g[i] ** 2))


def influence_profile(gammas) -> np.ndarray:
    """``Lambda_i = max_k Inf_i(Gamma_k)``."""
    rows = [np.sum(check_symmetric(g, "Gamma") ** 2, axis=1) for g in gammas]
    return np.max(np.stack(rows), axis=0)


def criterion_value(gammas, d: int | None = None) -> float:
    """``log(d)^6 max_k tr(Gamma_k^4) + log(d)^5 max_i sqrt(Lambda_i) sum_i Lambda_i``."""
    d = len(gammas) if d is None else int(d)
    if d < 2:
        raise ParameterError("criterion needs d >= 2")
    ld = math.log(d)
    t4 = max(trace_fourth(g) for g in gammas)
    lam = influence_profile(gammas)
    return ld**6 * t4 + ld**5 * math.sqrt(float(lam.max())) * float(lam.sum())


def autocovariance_family(N: int, d: int) -> list[np.ndarray]:
    """``gamma_k(i, j) = 1/sqrt(N)`` iff ``|i - j| = k``, ``k = 1..d``."""
    out = []
    for k in range(1, d + 1):
        g = np.zeros((N, N))
        idx = np.arange(N - k)
        g[idx, idx + k] = g[idx + k, idx] = 1.0 / math.sqrt(N)
        out.append(g)
    return out


# ------------------------------------------------------------- report ---


@dataclass
class DiagnosticsReport:
    variances: np.ndarray
    covariance: np.ndarray
    fourth_cumulants: np.ndarray
    influence: np.ndarray
    criterion: float | None
    spectral_norms: np.ndarray
    fourth_cumulant_bounds: np.ndarray
    remainders: dict | None = None
    mc: dict | None = None

    def to_dict(self) -> dict:
        conv = lambda v: v.tolist() if isinstance(v, np.ndarray) else v
        return {k: conv(v) for k, v in self.__dict__.items()}


def diagnostics(spec: QuadFormSpec, cov_z=None) -> DiagnosticsReport:
    cov = qf_covariance_matrix(spec)
    var = np.diag(cov).copy()
    k4 = np.array([qf_fourth_cumulant(g) for g in spec.gammas])
    sp = np.array([spectral_norm(g) for g in spec.gammas])
    rem = None
    if cov_z is not None:
        r2, r3 = theorem34_remainders(spec, cov_z)
        rem = {"R2": r2, "R3": r3}
    return DiagnosticsReport(
        variances=var, covariance=cov, fourth_cumulants=k4,
        influence=influence_profile(spec.gammas),
        criterion=criterion_value(spec.gammas) if spec.d >= 2 else None,
        spectral_norms=sp,
        # 48 tr(G^4) <= 24 ||G||_sp^2 E[F^2]
        fourth_cumulant_bounds=24.0 * sp**2 * var,
        remainders=rem,
    )


def theorem34_remainders(spec: QuadFormSpec, cov_z) -> tuple[float, float]:
    """``R2 = max |C(k,l) - 2 tr(G_k G_l)|`` and ``R3 = max sqrt(48 tr G_k^4)``."""
    cov_z = check_symmetric(cov_z, "cov_Z")
    exact = qf_covariance_matrix(spec)
    if cov_z.shape != exact.shape:
        raise DataError(f"cov_Z must be {exact.shape}, got {cov_z.shape}")
    r2 = float(np.max(np.abs(cov_z - exact)))
    r3 = max(math.sqrt(qf_fourth_cumulant(g)) for g in spec.gammas)
    return r2, r3


# ------------------------------------------------------ Monte Carlo ---


def _quad_forms(gammas, eta: np.ndarray) -> np.ndarray:
    """``eta_r' G_k eta_r - tr(G_k)`` for each draw ``r`` (rows) and ``k``."""
    out = np.empty((eta.shape[0], len(gammas)))
    for k, g in enumerate(gammas):
        diag = np.diag(g)
        if np.count_nonzero(g) == np.count_nonzero(diag):
            out[:, k] = (eta * eta) @ diag - diag.sum()
            continue
        if np.count_nonzero(g) > 0.1 * g.size:
            v = eta @ g
        else:
            v = (sparse.csr_matrix(g) @ eta.T).T
        out[:, k] = np.einsum("ri,ri->r", v, eta) - np.trace(g)
    return out


def sample_quadratic_forms(spec: QuadFormSpec, n_mc: int, seed=None, chunk: int = 8192) -> np.ndarray:
    """``(n_mc, d)`` draws of ``(F_1, ..., F_d)``."""
    rng = as_seed(seed).generator()
    out = np.empty((int(n_mc), spec.d))
    for start in range(0, out.shape[0], chunk):
        stop = min(out.shape[0], start + chunk)
        eta = rng.standard_normal((stop - start, spec.N))
        out[start:stop] = _quad_forms(spec.gammas, eta)
    return out


def ks_distance(x, y) -> float:
    """Sup distance between the empirical CDFs of two samples (pooled points)."""
    x = np.sort(np.asarray(x, dtype=float))
    y = np.sort(np.asarray(y, dtype=float))
    pts = np.concatenate([x, y])
    fx = np.searchsorted(x, pts, side="right") / x.size
    fy = np.searchsorted(y, pts, side="right") / y.size
    return float(np.max(np.abs(fx - fy)))


def mc_max_kolmogorov(spec: QuadFormSpec, cov_z, n_mc: int, seed=None) -> dict:
    """Monte Carlo Kolmogorov distances of ``max_k F_k`` vs ``max_k Z_k``.

    Returns the one-sided (``max``) and absolute (``max |.|``) versions.
    Substream 1 drives the quadratic forms, substream 2 the Gaussian vector.
    """
    if n_mc < 1000:
        raise ParameterError("n_mc must be at least 1000")
    seed = as_seed(seed)
    cov_z = check_symmetric(cov_z, "cov_Z")
    if cov_z.shape != (spec.d, spec.d):
        raise DataError(f"cov_Z must be {spec.d}x{spec.d}")
    F = sample_quadratic_forms(spec, n_mc, seed.substream(1))
    L = psd_factor(cov_z)
    Z = seed.substream(2).generator().standard_normal((int(n_mc), spec.d)) @ L.T
    return {
        "max": ks_distance(F.max(axis=1), Z.max(axis=1)),
        "abs_max": ks_distance(np.abs(F).max(axis=1), np.abs(Z).max(axis=1)),
        "n_mc": int(n_mc),
    }


def r1_mc_estimate(spec: QuadFormSpec, n_mc: int = 2000, seed=None,
                   y_kind: str = "rademacher") -> dict:
    """Monte Carlo *estimate* of the Lindeberg remainder ``R1``.

    ``R1 = sum_i E[max_k |sum_j G_k(i,j) W^(i)_j|^3] (E|Y_i|^3 + E|G_i|^3)``
    where ``W^(i)`` takes ``Y`` (Rademacher or Gaussian) in coordinates
    ``<= i`` and standard normals after. There is no closed form; the value
    carries Monte Carlo error and is labelled as an estimate.
    """
    if y_kind not in ("rademacher", "gaussian"):
        raise ParameterError("y_kind must be 'rademacher' or 'gaussian'")
    rng = as_seed(seed).generator()
    N = spec.N
    G = np.stack(spec.gammas)  # (d, N, N)
    abs_g3 = 2.0 * math.sqrt(2.0 / math.pi)
    abs_y3 = 1.0 if y_kind == "rademacher" else abs_g3
    total = 0.0
    for i in range(N):
        y = (rng.integers(0, 2, size=(n_mc, N)) * 2.0 - 1.0) if y_kind == "rademacher" \
            else rng.standard_normal((n_mc, N))
        g = rng.standard_normal((n_mc, N))
        w = np.where(np.arange(N) <= i, y, g)
        lin = w @ G[:, i, :].T  # (n_mc, d)
        total += float(np.mean(np.max(np.abs(lin), axis=1) ** 3)) * (abs_y3 + abs_g3)
    return {"R1_estimate": total, "n_mc": int(n_mc), "label": "Monte Carlo estimate"}
