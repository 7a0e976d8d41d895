import json

import numpy as np
import pytest

from llgauss import experiments
from llgauss.errors import ConfigurationError, ParameterError
from llgauss.experiments import (ExperimentConfig, RejectionTable, emit_plotdata,
                                 read_band_csv, run_table1)
from llgauss.leadlag import BootstrapConfig, LagGrid, lead_lag_test
from llgauss.rng import Seed
from llgauss.spotvol import BandResult

from conftest import make_path


def _small(**kw):
    base = dict(scenarios=[{"kind": "sync", "h": 0.006}, {"kind": "nonsync", "m": 300, "base_step": 1e-3}],
                rhos=[0.0, 0.75], n_mc=6, R=19, seed=11)
    return ExperimentConfig(**{**base, **kw})


def test_defaults_mirror_study():
    cfg = ExperimentConfig()
    assert cfg.theta == 0.1 and cfg.T == 1.0 and cfg.sigma1 == cfg.sigma2 == 1.0
    assert cfg.grid_radius == 0.3 and cfg.alphas == [0.01, 0.05, 0.10]
    assert [s.get("h") for s in cfg.scenarios[:3]] == [1e-3, 3e-3, 6e-3]
    assert cfg.scenarios[3] == {"kind": "nonsync", "m": 300, "base_step": 1e-3}


def test_config_validation_and_json(tmp_path):
    with pytest.raises(ConfigurationError):
        ExperimentConfig(schema_version=99)
    with pytest.raises(ParameterError):
        ExperimentConfig(n_mc=0)
    with pytest.raises(ConfigurationError):
        ExperimentConfig(scenarios=[{"kind": "weird"}])
    cfg = _small()
    f = tmp_path / "c.json"
    f.write_text(json.dumps(cfg.to_dict()))
    assert ExperimentConfig.from_json(f) == cfg


def test_table_is_deterministic_and_consistent(tmp_path):
    t1 = run_table1(_small(), out_dir=tmp_path / "a")
    t2 = run_table1(_small(), out_dir=tmp_path / "b")
    for name in ("table1.csv", "table1.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert len(t1.rows) == 2 * 2 * 3
    for r in t1.rows:
        assert r["rate"] == r["rejections"] / r["n_mc"]
        assert 0 <= r["rate"] <= 1
        assert r["se"] == pytest.approx(np.sqrt(r["rate"] * (1 - r["rate"]) / r["n_mc"]))
    assert t1.rate("sync", 0.006, 0.05, 0.75) == 1.0
    doc = json.loads((tmp_path / "a" / "table1.json").read_text())
    assert doc["status"] == "complete" and doc["config"]["seed"] == 11


def test_cells_are_independent_of_other_cells():
    full = run_table1(_small())
    only = run_table1(_small(rhos=[0.75], scenarios=[{"kind": "sync", "h": 0.006}]))
    assert only.rate("sync", 0.006, 0.1, 0.75) == full.rate("sync", 0.006, 0.1, 0.75)
    assert [r["rejections"] for r in only.rows] == \
        [r["rejections"] for r in full.rows if r["h"] == 0.006 and r["rho"] == 0.75]


def test_failure_flushes_partial(tmp_path, monkeypatch):
    real = experiments.run_cell
    calls = []

    def flaky(cfg, sc, rho, **kw):
        calls.append(rho)
        if len(calls) == 2:
            raise RuntimeError("boom")
        return real(cfg, sc, rho, **kw)

    monkeypatch.setattr(experiments, "run_cell", flaky)
    with pytest.raises(RuntimeError):
        run_table1(_small(), out_dir=tmp_path)
    doc = json.loads((tmp_path / "table1.json").read_text())
    assert doc["status"] == "aborted" and len(doc["rows"]) == 3


def test_rate_lookup_missing():
    with pytest.raises(KeyError):
        RejectionTable().rate("sync", 0.1, 0.05, 0.0)


# -------------------------------------------------------------- plotdata ---


def test_plotdata_three_lags():
    t = [0.0, 0.5, 1.0]
    p = make_path(t, [0, 1, 0], t, [0, 1, 2], T=1.0)
    rep = lead_lag_test(p, LagGrid(np.array([-0.5, 0.0, 0.5])), BootstrapConfig(R=9, seed=Seed(1)),
                        alpha=0.5)
    lines = emit_plotdata(rep).splitlines()
    assert lines[0] == "theta,U" and len(lines) == 4
    assert lines[2] == "0.0,0.0" and lines[3] == "0.5,1.0"
    # the JSON report gives the same series
    assert emit_plotdata(json.loads(rep.to_json())) == emit_plotdata(rep)


def test_plotdata_empty_grid_is_header_only(tmp_path):
    text = emit_plotdata({"contrast_table": []}, tmp_path / "u.csv")
    assert text == "theta,U\n" and (tmp_path / "u.csv").read_text() == text


def test_plotdata_band_keeps_invalid_rows(tmp_path):
    band = BandResult(np.array([0.1, 0.2]), np.array([1.0, 1.0]), np.array([0.1, 0.5]), 2.5,
                      np.array([0.8, 0.44]), np.array([1.33, np.inf]), np.array([True, False]))
    lines = emit_plotdata(band).splitlines()
    assert len(lines) == 3 and lines[2].endswith(",inf,false")
    band.write_csv(tmp_path / "b.csv")
    assert emit_plotdata(read_band_csv(tmp_path / "b.csv")) == emit_plotdata(band)
