"""Monte Carlo size/power study of the lead-lag test and plot-data export.

Every dataset of every cell is addressed by a seed path
``(master, cell_stream, iteration)``; the cell stream is a CRC32 of the
cell's description, so adding or removing cells never changes the numbers of
the others.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import zlib
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .errors import ConfigurationError, ParameterError
from .leadlag import BootstrapConfig, LagGrid, TestReport, lead_lag_test
from .rng import Seed
from .spotvol import BandResult
from .stochastics import LeadLagModel, make_scheme, simulate_leadlag

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1

DEFAULT_SCENARIOS = (
    {"kind": "sync", "h": 1e-3},
    {"kind": "sync", "h": 3e-3},
    {"kind": "sync", "h": 6e-3},
    {"kind": "nonsync", "m": 300, "base_step": 1e-3},
)


@dataclass
class ExperimentConfig:
    """Simulation design.

    ``n_mc`` and ``R`` default to desk scale; the full-scale study uses 10000
    and 999.
    """

    scenarios: list = field(default_factory=lambda: [dict(s) for s in DEFAULT_SCENARIOS])
    rhos: list = field(default_factory=lambda: [0.0, 0.25, 0.5, 0.75])
    alphas: list = field(default_factory=lambda: [0.01, 0.05, 0.10])
    theta: float = 0.1
    T: float = 1.0
    sigma1: float = 1.0
    sigma2: float = 1.0
    x0: float = 0.0
    grid_radius: float = 0.3
    n_mc: int = 1000
    R: int = 299
    multiplier: str = "rademacher"
    seed: int = 20190101
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigurationError(f"unsupported config schema {self.schema_version}")
        if self.n_mc < 1 or self.R < 1:
            raise ParameterError("n_mc and R must be positive")
        for sc in self.scenarios:
            if sc.get("kind") not in ("sync", "nonsync"):
                raise ConfigurationError(f"bad scenario {sc}")

    @classmethod
    def from_json(cls, text_or_path) -> "ExperimentConfig":
        p = Path(str(text_or_path))
        text = p.read_text() if p.exists() else str(text_or_path)
        return cls(**json.loads(text))

    def to_dict(self) -> dict:
        return asdict(self)


def scenario_name(sc: dict) -> str:
    if sc["kind"] == "sync":
        return f"sync(h={sc['h']!r})"
    return f"nonsync(m={sc.get('m', 300)},base={sc.get('base_step', 1e-3)!r})"


def _cell_stream(sc: dict, rho: float) -> int:
    return zlib.crc32(f"{scenario_name(sc)}|rho={rho!r}".encode())


def scenario_grid(sc: dict, radius: float) -> LagGrid:
    step = sc["h"] if sc["kind"] == "sync" else sc.get("base_step", 1e-3)
    return LagGrid.symmetric(step, radius)


def simulate_dataset(cfg: ExperimentConfig, sc: dict, rho: float, seed: Seed):
    model = LeadLagModel(cfg.x0, cfg.x0, cfg.sigma1, cfg.sigma2, rho, cfg.theta, cfg.T)
    if sc["kind"] == "sync":
        scheme = make_scheme("equidistant", {"h": sc["h"]}, cfg.T)
    else:
        scheme = make_scheme("subsample", {"m": sc.get("m", 300),
                                           "base_step": sc.get("base_step", 1e-3)},
                             cfg.T, seed.substream(0))
    return simulate_leadlag(model, scheme, seed.substream(1))


def run_cell(cfg: ExperimentConfig, sc: dict, rho: float,
             n_mc: int | None = None, R: int | None = None,
             collect: Callable[[int, TestReport], None] | None = None) -> dict:
    """Rejection counts of one (scenario, rho) cell at every level in ``cfg.alphas``."""
    n_mc = cfg.n_mc if n_mc is None else n_mc
    R = cfg.R if R is None else R
    grid = scenario_grid(sc, cfg.grid_radius)
    cell_seed = Seed(cfg.seed, _cell_stream(sc, rho))
    counts = {a: 0 for a in cfg.alphas}
    for it in range(n_mc):
        s = cell_seed.substream(it)
        path = simulate_dataset(cfg, sc, rho, s)
        rep = lead_lag_test(path, grid, BootstrapConfig(R, cfg.multiplier, s.substream(2)),
                            alpha=cfg.alphas[0])
        for a in cfg.alphas:
            counts[a] += rep.p_value <= a
        if collect is not None:
            collect(it, rep)
    return {"counts": counts, "n_mc": n_mc, "R": R, "stream": cell_seed.stream}


@dataclass
class RejectionTable:
    rows: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    status: str = "complete"

    FIELDS = ("scenario", "h", "alpha", "rho", "rejections", "n_mc", "rate", "se", "R", "seed", "stream")

    def add(self, sc, rho, alpha, rejections, n_mc, R, seed, stream):
        rate = rejections / n_mc
        self.rows.append({
            "scenario": sc["kind"], "h": sc.get("h", "nonsync"), "alpha": alpha, "rho": rho,
            "rejections": int(rejections), "n_mc": n_mc, "rate": rate,
            "se": math.sqrt(rate * (1 - rate) / n_mc), "R": R, "seed": seed, "stream": stream,
        })

    def rate(self, kind: str, h, alpha: float, rho: float) -> float:
        for r in self.rows:
            if r["scenario"] == kind and r["h"] == h and r["alpha"] == alpha and r["rho"] == rho:
                return r["rate"]
        raise KeyError((kind, h, alpha, rho))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=self.FIELDS, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"status": self.status, "config": self.config, "rows": self.rows},
                          indent=2, sort_keys=True)

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "table1.csv").write_text(self.to_csv())
        (out / "table1.json").write_text(self.to_json())


def run_table1(cfg: ExperimentConfig, out_dir=None,
               cells: Iterable[tuple[dict, float]] | None = None) -> RejectionTable:
    """Rejection rates for every (scenario, rho) cell and level.

    If a cell fails, the rows finished so far are written with status
    ``aborted`` before the exception propagates.
    """
    table = RejectionTable(config=cfg.to_dict())
    todo = list(cells) if cells is not None else [(sc, r) for sc in cfg.scenarios for r in cfg.rhos]
    try:
        for sc, rho in todo:
            log.info("cell %s rho=%s", scenario_name(sc), rho)
            res = run_cell(cfg, sc, rho)
            for a in cfg.alphas:
                table.add(sc, rho, a, res["counts"][a], res["n_mc"], res["R"], cfg.seed, res["stream"])
    except BaseException:
        table.status = "aborted"
        if out_dir is not None:
            table.write(out_dir)
        raise
    if out_dir is not None:
        table.write(out_dir)
    return table


# ------------------------------------------------------------ plot data ---


def _contrast_rows(report):
    if isinstance(report, TestReport):
        return list(zip(report.thetas.tolist(), report.contrast.tolist()))
    table = report.get("contrast_table", [])
    return [(r["theta"], r["U"]) for r in table]


def emit_plotdata(report, path=None) -> str:
    """Plain CSV of ``(theta, U)`` for a test report, or the band series of a
    :class:`BandResult`. Written to ``path`` when given; always returned."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if isinstance(report, BandResult) or (isinstance(report, dict) and "band" in report):
        b = report if isinstance(report, BandResult) else report["band"]
        get = (lambda k: getattr(b, k)) if isinstance(b, BandResult) else (lambda k: b[k])
        w.writerow(["t", "sigma2_hat", "s_n", "lower", "upper", "valid"])
        for row in zip(get("t"), get("sigma2_hat"), get("s_n"), get("lower"), get("upper"), get("valid")):
            w.writerow([repr(float(x)) for x in row[:5]] + [str(bool(row[5])).lower()])
    else:
        w.writerow(["theta", "U"])
        for th, u in _contrast_rows(report):
            w.writerow([repr(float(th)), repr(float(u))])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def read_band_csv(path) -> dict:
    cols = {"t": [], "sigma2_hat": [], "s_n": [], "lower": [], "upper": [], "valid": []}
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            for k in cols:
                cols[k].append(r[k] == "true" if k == "valid" else float(r[k]))
    return {"band": {k: np.asarray(v) for k, v in cols.items()}}
