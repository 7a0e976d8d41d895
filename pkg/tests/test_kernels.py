"""Numba and numpy kernels must agree; the sweep must equal the pair list."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from llgauss import _accel, _kernels

needs_numba = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not installed")


def _instance(rng, n1, n2, G, lattice=True):
    if lattice:
        s = np.concatenate(([0], np.sort(rng.choice(np.arange(1, 200), n1 - 1, replace=False)))).astype(float)
        u = np.concatenate(([0], np.sort(rng.choice(np.arange(1, 200), n2 - 1, replace=False)))).astype(float)
        shifts = np.sort(rng.choice(np.arange(-60, 61), G, replace=False)).astype(float)
    else:
        s = np.concatenate(([0], np.sort(rng.uniform(0, 1, n1 - 1))))
        u = np.concatenate(([0], np.sort(rng.uniform(0, 1, n2 - 1))))
        shifts = np.sort(rng.uniform(-0.3, 0.3, G))
    return s, u, shifts, rng.standard_normal(n1 - 1), rng.standard_normal(n2 - 1)


def _naive(s, u, shifts, a, b, eps=0.0):
    out = np.zeros(len(shifts))
    for g, th in enumerate(shifts):
        acc = 0.0
        for i in range(len(s) - 1):
            for j in range(len(u) - 1):
                if s[i] + eps < u[j + 1] - th and u[j] - th + eps < s[i + 1]:
                    acc += a[i] * b[j]
        out[g] = acc
    return out


@pytest.mark.parametrize("lattice", [True, False])
def test_numpy_kernels_match_naive(rng, lattice):
    for _ in range(25):
        s, u, sh, a, b = _instance(rng, rng.integers(2, 40), rng.integers(2, 40), 9, lattice)
        ref = _naive(s, u, sh, a, b)
        assert np.array_equal(_kernels.sweep_contrast_np(s, u, sh, a, b), ref)
        o, pi, pj = _kernels.build_pairs_np(s, u, sh)
        assert np.array_equal(_kernels.pair_contrast_np(o, pi, pj, a, b), ref)
        assert np.array_equal(np.diff(o), _kernels.count_pairs_np(s, u, sh))


@needs_numba
@pytest.mark.parametrize("lattice", [True, False])
def test_numba_kernels_match_naive(rng, lattice):
    for _ in range(25):
        s, u, sh, a, b = _instance(rng, rng.integers(2, 40), rng.integers(2, 40), 9, lattice)
        ref = _naive(s, u, sh, a, b)
        assert np.array_equal(_kernels.sweep_contrast_nb(s, u, sh, a, b, 0.0), ref)
        o, pi, pj = _kernels.build_pairs_nb(s, u, sh)
        assert np.array_equal(_kernels.pair_contrast_nb(o, pi, pj, a, b), ref)


@needs_numba
def test_pair_lists_identical_across_backends(rng):
    s, u, sh, _, _ = _instance(rng, 35, 28, 15)
    for x, y in zip(_kernels.build_pairs_nb(s, u, sh), _kernels.build_pairs_np(s, u, sh)):
        assert np.array_equal(x, y)


@needs_numba
def test_bootstrap_backends_agree(rng):
    s, u, sh, a, b = _instance(rng, 39, 33, 11)
    R = 17
    aw = rng.choice([-1.0, 1.0], (a.size, R)) * a[:, None]
    bw = rng.choice([-1.0, 1.0], (b.size, R)) * b[:, None]
    o, pi, pj = _kernels.build_pairs_np(s, u, sh)
    ref = np.array([np.max(np.abs(_naive(s, u, sh, aw[:, r], bw[:, r]))) for r in range(R)])
    for got in (_kernels.pair_bootstrap_nb(o, pi, pj, aw, bw),
                _kernels.sweep_bootstrap_nb(s, u, sh, aw, bw, 0.0)):
        assert np.array_equal(got, ref)
    for got in (_kernels.pair_bootstrap_np(o, pi, pj, aw, bw),
                _kernels.sweep_bootstrap_np(s, u, sh, aw, bw)):
        assert np.allclose(got, ref, rtol=1e-12, atol=1e-15)


def test_epsilon_drops_touching_pairs():
    s = np.array([0.0, 1.0, 2.0])
    u = np.array([0.0, 1.0 + 1e-13, 2.0])
    a = np.ones(2)
    b = np.ones(2)
    sh = np.array([0.0])
    assert _kernels.sweep_contrast_np(s, u, sh, a, b)[0] == 3.0
    assert _kernels.sweep_contrast_np(s, u, sh, a, b, 1e-9)[0] == 2.0


def test_empty_grid_shapes():
    s = np.array([0.0, 1.0])
    o, pi, pj = _kernels.build_pairs_np(s, s, np.array([]))
    assert o.tolist() == [0] and pi.size == 0


_SCRIPT = """
import json, numpy as np
from llgauss import backend
from llgauss.leadlag import LagGrid, BootstrapConfig, lead_lag_test
from llgauss.stochastics import LeadLagModel, make_scheme, simulate_leadlag
from llgauss.rng import Seed
m = LeadLagModel(0, 0, 1, 1, 0.3, 0.02, 1.0)
p = simulate_leadlag(m, make_scheme("subsample", {"m": 80, "base_step": 0.01}, 1.0, Seed(1)), Seed(2))
r = lead_lag_test(p, LagGrid.symmetric(0.01, 0.1), BootstrapConfig(R=49, seed=Seed(3)))
print(json.dumps({"backend": backend(), "u": r.contrast.tolist(), "t": r.statistic,
                  "tstar": r.tstar.tolist(), "p": r.p_value}))
"""


def _run(disable: bool) -> dict:
    env = dict(os.environ)
    env.pop("LLGAUSS_DISABLE_NUMBA", None)
    if disable:
        env["LLGAUSS_DISABLE_NUMBA"] = "1"
    out = subprocess.run([sys.executable, "-c", _SCRIPT], env=env, check=True,
                         capture_output=True, text=True)
    return json.loads(out.stdout)


@needs_numba
def test_env_flag_selects_numpy_path_with_same_results():
    fast, slow = _run(False), _run(True)
    assert fast["backend"] == "numba" and slow["backend"] == "numpy"
    assert fast["u"] == slow["u"] and fast["t"] == slow["t"]
    assert np.allclose(fast["tstar"], slow["tstar"], rtol=1e-12)
    assert fast["p"] == slow["p"]
