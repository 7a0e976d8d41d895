"""Command-line interface.

``llgauss <subcommand>`` with subcommands ``simulate``, ``llag-test``,
``spotvol``, ``qform``, ``table1`` and ``plotdata``. ``llag-test``,
``spotvol`` and ``qform`` are also installed as standalone commands.

Exit codes: 0 success, 2 data error, 3 configuration error, 1 anything else
raised by the library.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import _accel
from .errors import ConfigurationError, DataError, LLGaussError
from .experiments import ExperimentConfig, emit_plotdata, read_band_csv, run_table1
from .leadlag import BootstrapConfig, LagGrid, build_partition, lead_lag_test
from .qform import QuadFormSpec, diagnostics, mc_max_kolmogorov, read_matrix
from .rng import Seed
from .spotvol import SpotVolConfig, undersmoothing_diagnostics, uniform_band
from .stochastics import (LeadLagModel, make_scheme, read_path_csv, simulate_leadlag,
                          write_path_csv)

log = logging.getLogger("llgauss")


def _warn(msg: str) -> None:
    print(f"warning: {msg}", file=sys.stderr)


def _write(text: str, out) -> None:
    if out in (None, "-"):
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(out).write_text(text)


def _global(p: argparse.ArgumentParser, default_seed: int | None = 0) -> None:
    p.add_argument("--seed", type=int, default=default_seed, help="master seed")
    p.add_argument("--threads", type=int, default=None, help="numba worker threads")
    p.add_argument("--out", default=None, help="output file (stdout if omitted)")


# ---------------------------------------------------------- subcommands ---


def _cmd_simulate(a) -> int:
    model = LeadLagModel(a.x0, a.x0, a.sigma1, a.sigma2, a.rho, a.theta, a.T)
    seed = Seed(a.seed)
    if a.scheme == "sync":
        scheme = make_scheme("equidistant", {"h": a.h}, a.T)
    else:
        scheme = make_scheme("subsample", {"m": a.m, "base_step": a.base_step}, a.T,
                             seed.substream(0))
    path = simulate_leadlag(model, scheme, seed.substream(1))
    if a.out is None:
        raise ConfigurationError("simulate needs --out path.csv")
    write_path_csv(path, a.out)
    return 0


def _cmd_llag_test(a) -> int:
    path = read_path_csv(a.data, T=a.T)
    grid = LagGrid.symmetric(a.grid_step, a.grid_radius)
    min_width = min(build_partition(path.times1).widths.min(),
                    build_partition(path.times2).widths.min())
    if a.grid_step > min_width * (1 + 1e-9):
        _warn(f"grid step {a.grid_step:g} exceeds the smallest observation interval "
              f"{min_width:g}; the lag grid may be too coarse to localise the lag")
    cfg = BootstrapConfig(R=a.R, multiplier=a.multiplier, seed=Seed(a.seed),
                          scale_by_sqrt_n=a.n is not None)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rep = lead_lag_test(path, grid, cfg, alpha=a.alpha, n=a.n, eps=a.eps)
    for w in caught:
        _warn(str(w.message))
    d = rep.to_dict()
    if not a.keep_tstar:
        d.pop("tstar")
    _write(json.dumps(d, indent=2), a.out)
    if a.plot_csv:
        emit_plotdata(rep, a.plot_csv)
    return 0


def _read_series(path, asset: int | None):
    """``time,value`` CSV, or ``asset,time,value`` filtered to one asset."""
    import csv
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError(f"{path}: empty file")
        names = [f.strip().lower() for f in reader.fieldnames]
        vcol = "value" if "value" in names else "price" if "price" in names else None
        if "time" not in names or vcol is None:
            raise DataError(f"{path}: need columns time,value")
        t, x = [], []
        for raw in reader:
            rec = {k.strip().lower(): v for k, v in raw.items()}
            try:
                if "asset" in rec and int(float(rec["asset"])) != (asset or 1):
                    continue
                t.append(float(rec["time"]))
                x.append(float(rec[vcol]))
            except (TypeError, ValueError) as exc:
                raise DataError(f"{path}: bad row {raw}") from exc
    order = np.argsort(t, kind="stable")
    return np.asarray(t)[order], np.asarray(x)[order]


def _cmd_spotvol(a) -> int:
    times, x = _read_series(a.data, a.asset)
    if times.size < 2:
        raise DataError("need at least two observations")
    T = float(times[-1])
    cfg = SpotVolConfig(h=a.h, kernel=a.kernel, a_n=a.an, delta=a.delta, alpha=a.alpha,
                        R=a.R, seed=Seed(a.seed), T=T)
    if a.gamma is not None:
        diag = undersmoothing_diagnostics(times.size - 1, a.h, a.gamma)
        if diag["bias_warning"]:
            _warn(f"n h^(1+2 gamma) log n = {diag['bias_term']:.3g} > 1: bias may not be negligible")
        if diag["noise_warning"]:
            _warn(f"log^6 n / (n h) = {diag['noise_term']:.3g} > 1: bandwidth too small for n")
    band = uniform_band(times, x, cfg)
    if not band.valid.all():
        _warn(f"{int((~band.valid).sum())} evaluation points have 1 - s_n q <= 0 (upper limit infinite)")
    if a.out is None:
        sys.stdout.write(emit_plotdata(band))
    else:
        band.write_csv(a.out)
    return 0


def _cmd_qform(a) -> int:
    spec = QuadFormSpec.from_json(a.spec)
    cov = read_matrix(a.cov) if a.cov else None
    rep = diagnostics(spec, cov)
    if a.mc:
        if cov is None:
            raise ConfigurationError("--mc needs --cov for the comparison Gaussian vector")
        rep.mc = mc_max_kolmogorov(spec, cov, a.mc, Seed(a.seed))
    _write(json.dumps(rep.to_dict(), indent=2), a.out)
    return 0


def _cmd_table1(a) -> int:
    cfg = ExperimentConfig.from_json(a.config) if a.config else ExperimentConfig()
    over = {k: v for k, v in (("n_mc", a.n_mc), ("R", a.R), ("seed", a.seed)) if v is not None}
    if a.rho:
        over["rhos"] = a.rho
    if a.scenario:
        over["scenarios"] = [_parse_scenario(s) for s in a.scenario]
    cfg = ExperimentConfig(**{**cfg.to_dict(), **over})
    table = run_table1(cfg, out_dir=a.out)
    if a.out is None:
        sys.stdout.write(table.to_csv())
    return 0


def _parse_scenario(text: str) -> dict:
    """``sync:0.003`` or ``nonsync`` / ``nonsync:300:0.001``."""
    parts = text.split(":")
    try:
        if parts[0] == "sync" and len(parts) == 2:
            return {"kind": "sync", "h": float(parts[1])}
        if parts[0] == "nonsync" and len(parts) in (1, 3):
            m, b = (int(parts[1]), float(parts[2])) if len(parts) == 3 else (300, 1e-3)
            return {"kind": "nonsync", "m": m, "base_step": b}
    except ValueError:
        pass
    raise ConfigurationError(f"bad scenario {text!r}; use sync:H or nonsync[:M:BASE]")


def _cmd_plotdata(a) -> int:
    src = Path(a.report)
    if not src.exists():
        raise DataError(f"{src}: no such file")
    if src.suffix == ".json":
        try:
            obj = json.loads(src.read_text())
        except json.JSONDecodeError as exc:
            raise DataError(f"{src}: not JSON ({exc})") from exc
    else:
        obj = read_band_csv(src)
    _write(emit_plotdata(obj), a.out)
    return 0


# --------------------------------------------------------------- parser ---


def _add_llag(p):
    p.add_argument("--data", required=True, help="CSV with columns asset,time,price")
    p.add_argument("--grid-step", type=float, required=True)
    p.add_argument("--grid-radius", type=float, required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--R", type=int, default=999)
    p.add_argument("--multiplier", choices=("rademacher", "gaussian"), default="rademacher")
    p.add_argument("--n", type=int, default=None, help="sample size for sqrt(n) scaling")
    p.add_argument("--eps", type=float, default=0.0, help="overlap tolerance")
    p.add_argument("--T", type=float, default=None, help="horizon if no sidecar JSON")
    p.add_argument("--plot-csv", default=None, help="also write the (theta, U) series")
    p.add_argument("--keep-tstar", action="store_true", help="include bootstrap draws")
    p.set_defaults(func=_cmd_llag_test)


def _add_spotvol(p):
    p.add_argument("--data", required=True, help="CSV with columns time,value")
    p.add_argument("--asset", type=int, default=None, help="asset id if the CSV has several")
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--kernel", default="epanechnikov")
    p.add_argument("--an", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--R", type=int, default=10_000)
    p.add_argument("--gamma", type=float, default=None, help="Hoelder exponent for the bandwidth check")
    p.set_defaults(func=_cmd_spotvol)


def _add_qform(p):
    p.add_argument("--spec", required=True, help="JSON with 'gammas' or 'sigma' and 'A'")
    p.add_argument("--cov", default=None, help="dense CSV covariance of the comparison Z")
    p.add_argument("--mc", type=int, default=0, help="Monte Carlo draws for Kolmogorov distance")
    p.set_defaults(func=_cmd_qform)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="llgauss", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a lead-lag path pair")
    _global(p)
    p.add_argument("--rho", type=float, default=0.0)
    p.add_argument("--theta", type=float, default=0.1)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--sigma1", type=float, default=1.0)
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--x0", type=float, default=0.0)
    p.add_argument("--scheme", choices=("sync", "nonsync"), default="sync")
    p.add_argument("--h", type=float, default=1e-3)
    p.add_argument("--m", type=int, default=300)
    p.add_argument("--base-step", type=float, default=1e-3)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("llag-test", help="test for absence of lead-lag")
    _global(p)
    _add_llag(p)

    p = sub.add_parser("spotvol", help="uniform band for spot volatility")
    _global(p)
    _add_spotvol(p)

    p = sub.add_parser("qform", help="quadratic-form diagnostics")
    _global(p)
    _add_qform(p)

    p = sub.add_parser("table1", help="Monte Carlo rejection-rate table")
    _global(p, default_seed=None)
    p.add_argument("--config", default=None, help="JSON ExperimentConfig")
    p.add_argument("--n-mc", type=int, default=None)
    p.add_argument("--R", type=int, default=None)
    p.add_argument("--rho", type=float, action="append", default=None)
    p.add_argument("--scenario", action="append", default=None,
                   help="sync:H or nonsync[:M:BASE]; repeatable")
    p.set_defaults(func=_cmd_table1)

    p = sub.add_parser("plotdata", help="CSV series from a report JSON or band CSV")
    _global(p)
    p.add_argument("--report", required=True)
    p.set_defaults(func=_cmd_plotdata)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    _accel.set_threads(args.threads)
    try:
        return int(args.func(args) or 0)
    except LLGaussError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DataError.exit_code


def _standalone(name: str):
    def entry(argv=None) -> int:
        argv = sys.argv[1:] if argv is None else list(argv)
        return main([name, *argv])
    entry.__name__ = name.replace("-", "_") + "_main"
    return entry


llag_test_main = _standalone("llag-test")
spotvol_main = _standalone("spotvol")
qform_main = _standalone("qform")


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
