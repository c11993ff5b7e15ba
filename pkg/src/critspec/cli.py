"""Batch front end: ``critspec <command> --config run.json --out dir``."""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .classical import period_lower_bound
from .detector import (classify_level, default_test_function, density_from_quantum, hessian_from_quantum,
                       invert_level)
from .errors import (ConfigError, CritspecError, DimensionError, DomainError, IndefiniteGermError,
                     ResolutionError)
from .invariants import exponent_table_csv
from .potential import Potential, find_critical_points, from_config
from .quantum1d import SolverParams, compute_spectrum
from .specdist import DEFAULT_H_LIST, e_scan, h_sweep
from .testfn import TestFunction, make_test_function

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_INCONCLUSIVE = 0, 2, 3, 4
COMMANDS = ("spectrum", "scan", "sweep", "detect", "density", "invert", "tables")

# errors caused by the request rather than by the numerics
_CONFIG_ERRORS = (ConfigError, DomainError, ResolutionError, DimensionError, IndefiniteGermError)


def _need(cond, msg):
    if not cond:
        raise ConfigError(msg)


@dataclass
class RunConfig:
    """Validated run configuration (JSON-compatible)."""

    potential: dict
    window: tuple[float, float] | None = None
    eps: float | None = None
    test_function: dict | None = None
    h_list: tuple[float, ...] = tuple(DEFAULT_H_LIST)
    solver: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)
    output_dir: str = "out"
    workers: int | None = None
    raw: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        _need(isinstance(d, dict), "config must be a JSON object")
        known = {"potential", "window", "eps", "test_function", "h_list", "solver", "options",
                 "output_dir", "workers"}
        extra = sorted(set(d) - known)
        _need(not extra, f"unknown config keys: {extra}")
        _need(isinstance(d.get("potential"), dict) and "kind" in d["potential"],
              "potential must be an object with a 'kind'")
        window = d.get("window")
        if window is not None:
            _need(len(window) == 2 and float(window[0]) < float(window[1]),
                  "window must be [E1, E2] with E1 < E2")
            window = (float(window[0]), float(window[1]))
        eps = d.get("eps")
        if eps is not None:
            _need(float(eps) >= 0, "eps must be non-negative")
            eps = float(eps)
        hs = tuple(float(h) for h in d.get("h_list", DEFAULT_H_LIST))
        _need(len(hs) >= 1 and all(0 < h < 1 for h in hs), "h_list entries must lie in (0, 1)")
        _need(all(a > b for a, b in zip(hs, hs[1:])), "h_list must be strictly decreasing")
        solver = dict(d.get("solver", {}))
        bad = sorted(set(solver) - {"L", "N", "oversample", "tol", "richardson"})
        _need(not bad, f"unknown solver keys: {bad}")
        tfs = d.get("test_function")
        if tfs is not None:
            _need("support" in tfs and len(tfs["support"]) == 2, "test_function needs a two-point support")
        workers = d.get("workers")
        _need(workers is None or int(workers) >= 1, "workers must be >= 1")
        return cls(d["potential"], window, eps, tfs, hs, solver, dict(d.get("options", {})),
                   str(d.get("output_dir", "out")), None if workers is None else int(workers), d)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        return cls.from_dict(d)

    @property
    def sha256(self) -> str:
        # the worker count does not change any result
        d = {k: v for k, v in self.raw.items() if k not in ("workers", "output_dir")}
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()

    def build_potential(self) -> Potential:
        return from_config(self.potential)

    def params(self) -> SolverParams:
        return SolverParams(**self.solver)

    def build_test_function(self, pot=None, E=None) -> TestFunction:
        if self.test_function is None:
            _need(pot is not None and E is not None, "test_function is required for this command")
            return default_test_function(pot, E)
        t = self.test_function
        return make_test_function(int(t.get("j0", 0)), float(t["support"][0]), float(t["support"][1]),
                                  t.get("mode", "one_sided"))

    def opt(self, key, default=None, required=False):
        if required:
            _need(key in self.options, f"options.{key} is required")
        return self.options.get(key, default)


# -- output -------------------------------------------------------------------

def _provenance(cfg: RunConfig, extra=None) -> dict:
    p = {"config_sha256": cfg.sha256, "version": __version__, "potential": cfg.potential,
         "solver": cfg.params().to_json()}
    if extra:
        p.update(extra)
    return p


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _write_json(out: Path, name: str, data: dict) -> Path:
    path = out / name
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")
    return path


def _write_csv(out: Path, name: str, body: str, prov: dict) -> Path:
    """CSV with provenance as leading '#' comment lines; the body after them
    is a plain deterministic table."""
    path = out / name
    head = "".join(f"# {k}: {json.dumps(_jsonable(v), sort_keys=True)}\n" for k, v in sorted(prov.items()))
    path.write_text(head + body)
    return path


def read_csv_body(path) -> list[list[str]]:
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    return list(csv.reader(lines))


# -- commands -----------------------------------------------------------------

def cmd_spectrum(cfg: RunConfig, out: Path):
    h = float(cfg.opt("h", required=True))
    _need(0 < h < 1, "options.h must lie in (0, 1)")
    _need(cfg.window is not None, "spectrum needs a window")
    pot = cfg.build_potential()
    spec = compute_spectrum(pot, h, cfg.window, cfg.eps or 0.0, cfg.params())
    prov = _provenance(cfg, {"h": h, "grid": {"L": spec.L, "N": spec.N}})
    files = [_write_csv(out, "spectrum.csv", spec.to_csv(), prov),
             _write_json(out, "spectrum.json", {**spec.to_json(), "provenance": prov})]
    return files, True


def _energy_grid(cfg):
    g = cfg.opt("E_grid", required=True)
    _need(isinstance(g, dict) and {"start", "stop", "num"} <= set(g), "options.E_grid needs start, stop, num")
    _need(int(g["num"]) >= 3 and float(g["start"]) < float(g["stop"]), "options.E_grid is empty")
    return np.linspace(float(g["start"]), float(g["stop"]), int(g["num"]))


def _scan_test_function(cfg, pot, grid):
    if cfg.test_function is not None:
        return cfg.build_test_function()
    T = period_lower_bound(pot, (float(grid[0]), float(grid[-1])), cfg.opt("band", 0.2))
    return make_test_function(0, 0.1 * T, 0.9 * T, "one_sided")


def cmd_scan(cfg: RunConfig, out: Path):
    h = float(cfg.opt("h", required=True))
    pot = cfg.build_potential()
    grid = _energy_grid(cfg)
    tf = _scan_test_function(cfg, pot, grid)
    prof = e_scan(pot, h, tf, grid, cfg.params(), eps=cfg.eps)
    prov = _provenance(cfg, {"h": h, "test_function": tf.to_json(), "max_floor": float(np.max(prof.floors))})
    if prof.warning:
        print(f"warning: {prof.warning}", file=sys.stderr)
    files = [_write_csv(out, "scan.csv", prof.to_csv(), prov),
             _write_json(out, "scan.json", {**prof.to_json(), "provenance": prov})]
    return files, True


def cmd_sweep(cfg: RunConfig, out: Path):
    E = float(cfg.opt("E", required=True))
    pot = cfg.build_potential()
    tf = cfg.build_test_function(pot, E)
    sw = h_sweep(pot, E, tf, cfg.h_list, cfg.params(), window=cfg.window, eps=cfg.eps, workers=cfg.workers)
    verdict = classify_level(pot, E, tf, cfg.params(), mode=cfg.opt("mode", "strict"), sweep=sw)
    prov = _provenance(cfg, {"E": E, "test_function": tf.to_json(),
                             "max_tail_bound": float(np.max(sw.tail_bounds))})
    files = [_write_csv(out, "sweep.csv", sw.to_csv(), prov),
             _write_json(out, "sweep.json", {"sweep": sw.to_json(), "verdict": verdict.to_json(),
                                             "provenance": prov})]
    return files, verdict.kind != "inconclusive"


def _snap(peaks, levels, tol):
    """Scan peaks paired with the nearest critical value within tol."""
    out = []
    for p in peaks:
        near = [v for v in levels if abs(v - p) <= tol]
        if near:
            v = min(near, key=lambda v: abs(v - p))
            if v not in out:
                out.append(v)
    return out


def cmd_detect(cfg: RunConfig, out: Path):
    """Scan for contrast peaks, snap them to critical values of V and decide
    each candidate with an h-sweep."""
    pot = cfg.build_potential()
    grid = _energy_grid(cfg)
    h = float(cfg.opt("h", 0.01))
    tf = _scan_test_function(cfg, pot, grid)
    prof = e_scan(pot, h, tf, grid, cfg.params(), eps=cfg.eps)
    levels = sorted({round(c.value, 12) for c in find_critical_points(pot)
                     if c.extremal and grid[0] <= c.value <= grid[-1]})
    candidates = _snap(prof.peaks, levels, float(cfg.opt("snap_tol", 5 * h)))
    candidates += [float(E) for E in cfg.opt("levels", []) if float(E) not in candidates]
    results = []
    for E in candidates:
        tfE = cfg.build_test_function(pot, E) if cfg.test_function else default_test_function(pot, E)
        v = classify_level(pot, E, tfE, cfg.params(), cfg.h_list, window=(E - 1.0, E + 1.0))
        results.append(v.to_json())
    prov = _provenance(cfg, {"h": h, "test_function": tf.to_json()})
    files = [_write_csv(out, "scan.csv", prof.to_csv(), prov),
             _write_json(out, "detect.json", {"peaks": list(prof.peaks), "critical_values": levels,
                                              "candidates": candidates, "levels": results,
                                              "warning": prof.warning, "provenance": prov})]
    for r in results:
        print(f"E={r['E']:.6g}: {r['verdict']} ({r['reason']})")
    ok = not results or any(r["verdict"] != "inconclusive" for r in results)
    return files, ok


def _critical_point(pot, E_c):
    cps = [c for c in find_critical_points(pot) if abs(c.value - E_c) < 1e-6]
    _need(len(cps) >= 1, f"no critical point at level {E_c}")
    return cps[0]


def cmd_density(cfg: RunConfig, out: Path):
    E_c = float(cfg.opt("E_c", required=True))
    centers = [float(t) for t in cfg.opt("centers", required=True)]
    pot = cfg.build_potential()
    cp = _critical_point(pot, E_c)
    samples = density_from_quantum(pot, cp, E_c, centers, cfg.params(),
                                   half_width=float(cfg.opt("half_width", 0.3)), h_list=cfg.h_list,
                                   T=cfg.opt("T"))
    body = io.StringIO()
    w = csv.writer(body, lineterminator="\n")
    w.writerow(["t", "density", "alpha", "C"])
    for s in samples:
        w.writerow([repr(s.t), repr(s.value), repr(s.alpha), repr(s.C)])
    prov = _provenance(cfg, {"E_c": E_c, "critical_point": cp.to_json()})
    data = {"samples": [[s.t, s.value] for s in samples], "provenance": prov}
    if len(samples) >= 8 * (pot.dim + 1):
        data["hessian"] = hessian_from_quantum(samples, pot.dim).to_json()
    files = [_write_csv(out, "density.csv", body.getvalue(), prov), _write_json(out, "density.json", data)]
    return files, True


def cmd_invert(cfg: RunConfig, out: Path):
    E_c = float(cfg.opt("E_c", required=True))
    pot = cfg.build_potential()
    tf = cfg.build_test_function(pot, E_c) if cfg.test_function else None
    cal = cfg.opt("calibration")
    if cal is not None:
        _need({"potential", "level", "A"} <= set(cal), "options.calibration needs potential, level, A")
        cal = (from_config(cal["potential"]), float(cal["level"]), float(cal["A"]))
    report = invert_level(pot, E_c, cfg.params(), cfg.h_list, tf=tf, calibration=cal,
                          density_centers=cfg.opt("density_centers"),
                          probe_log=bool(cfg.opt("probe_log", True)))
    prov = _provenance(cfg, {"E_c": E_c})
    files = [_write_json(out, "report.json", {**report.to_json(), "provenance": prov})]
    (out / "report.txt").write_text(report.summary() + "\n")
    files.append(out / "report.txt")
    print(report.summary())
    return files, report.type != "inconclusive"


def cmd_tables(cfg: RunConfig | None, out: Path):
    n_max = int(cfg.opt("n_max", 4)) if cfg else 4
    k_max = int(cfg.opt("k_max", 5)) if cfg else 5
    path = out / "exponents.csv"
    path.write_text(exponent_table_csv(n_max, k_max))
    return [path], True


_DISPATCH = {"spectrum": cmd_spectrum, "scan": cmd_scan, "sweep": cmd_sweep, "detect": cmd_detect,
             "density": cmd_density, "invert": cmd_invert, "tables": cmd_tables}


# -- plot scripts ---------------------------------------------------------------

def emit_plots(files) -> list[Path]:
    """gnuplot scripts next to each CSV: log-log for h-sweeps, linear for
    energy profiles and everything else."""
    scripts = []
    for f in files:
        f = Path(f)
        if f.suffix != ".csv":
            continue
        if not f.exists():
            raise FileNotFoundError(f"[cli] data file {f} does not exist")
        rows = read_csv_body(f)
        header = rows[0] if rows else []
        empty = len(rows) <= 1
        lines = ["set terminal pngcairo", f"set output '{f.stem}.png'", "set datafile separator ','",
                 "set datafile columnheaders", "set key off"]
        if "h" in header and "abs" in header:
            x, y = header.index("h") + 1, header.index("abs") + 1
            lines += ["set logscale xy", "set xlabel 'h'", "set ylabel '|Upsilon|'"]
            plot = f"plot '{f.name}' using {x}:{y} with linespoints"
            if "tail_bound" in header:
                plot += f", '' using {x}:{header.index('tail_bound') + 1} with lines dt 2"
        elif header:
            x = 1
            y = header.index("abs") + 1 if "abs" in header else 2
            lines += [f"set xlabel '{header[0]}'", f"set ylabel '{header[y - 1] if y <= len(header) else ''}'"]
            plot = f"plot '{f.name}' using {x}:{y} with lines"
        else:
            plot = ""
        if empty:
            lines.append("# empty dataset: nothing to plot")
        elif plot:
            lines.append(plot)
        path = f.with_suffix(".gp")
        path.write_text("\n".join(lines) + "\n")
        scripts.append(path)
    return scripts


# -- entry point ----------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="critspec", description=__doc__)
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", "-c", help="run configuration (JSON)")
    p.add_argument("--out", "-o", help="output directory (overrides output_dir)")
    p.add_argument("--no-plots", action="store_true", help="skip gnuplot scripts")
    return p


def _report_error(exc, code):
    module = getattr(exc, "module", "critspec")
    msg = exc.args[0] if exc.args else str(exc)
    print(json.dumps({"error": type(exc).__name__, "module": module, "message": str(msg),
                      "exit_code": code}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = None
        if args.config is not None:
            cfg = RunConfig.load(args.config)
        elif args.command != "tables":
            raise ConfigError(f"{args.command} needs --config")
        out = Path(args.out or (cfg.output_dir if cfg else "out"))
        out.mkdir(parents=True, exist_ok=True)
        files, ok = _DISPATCH[args.command](cfg, out)
        if not args.no_plots:
            emit_plots(files)
    except _CONFIG_ERRORS as exc:
        return _report_error(exc, EXIT_CONFIG)
    except CritspecError as exc:
        return _report_error(exc, EXIT_SOLVER)
    except (TypeError, ValueError, KeyError) as exc:
        # malformed values inside an otherwise valid config
        exc = ConfigError(f"invalid configuration value: {exc}")
        return _report_error(exc, EXIT_CONFIG)
    for f in files:
        print(f)
    return EXIT_OK if ok else EXIT_INCONCLUSIVE


if __name__ == "__main__":
    sys.exit(main())
