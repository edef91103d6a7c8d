"""Command-line runner: verify | scan | thresholds | export | analyze.

Scans are driven by a flat INI config.  Each (L, p) cell draws its disorder
from ``numpy.random.SeedSequence(master_seed, spawn_key=(L, p_index, obs_index))``
so results do not depend on ``--jobs``; rows are written in canonical cell
order by a single writer, and ``--resume`` continues a truncated CSV.
"""

from __future__ import annotations

import argparse
import configparser
import datetime as _dt
import hashlib
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import crossing_find, threshold_table
from .lattice import CONVENTION_VERSION
from .observables import MODEL_OF, ObservableSpec, evaluate
from .records import (Row, complete_rows, file_digest, format_line, from_json, header_line,
                      read_csv, to_csv_text, to_gnuplot, to_json)
from .statmech.exact import BudgetError

log = logging.getLogger("toposep")

SEED_STREAM_VERSION = "1"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


# --- configuration -----------------------------------------------------------

def _floats(text: str) -> list[float]:
    return [float(x) for x in text.replace(",", " ").split()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.replace(",", " ").split()]


@dataclass(frozen=True)
class ExperimentConfig:
    observables: tuple
    sizes: tuple
    p_grid: tuple
    backend: str
    samples: int
    seed: int
    out: str

    @classmethod
    def from_parser(cls, cp: configparser.ConfigParser, seed=None, out=None) -> "ExperimentConfig":
        if "scan" not in cp:
            raise ValueError("config needs a [scan] section")
        s = cp["scan"]
        if "p" in s:
            grid = _floats(s["p"])
        else:
            lo, hi, step = float(s["p_start"]), float(s["p_stop"]), float(s["p_step"])
            n = int(math.floor((hi - lo) / step + 1e-9)) + 1
            grid = [round(lo + i * step, 12) for i in range(n)]
        specs = []
        for name in s.get("observables", "thooft2d").split():
            section = f"observable:{name}"
            geom = ()
            if section in cp:
                geom = tuple(sorted((k, _geom_value(v)) for k, v in cp[section].items()))
            specs.append(ObservableSpec(name, geom, MODEL_OF.get(name, "")))
        cfg = cls(tuple(specs), tuple(_ints(s.get("sizes", "4"))), tuple(grid),
                  s.get("backend", "exact"), int(s.get("samples", "1")),
                  int(seed if seed is not None else s.get("seed", "0")),
                  str(out if out is not None else s.get("out", "out")))
        cfg.validate()
        return cfg

    def validate(self):
        if not self.sizes or not self.p_grid:
            raise ValueError("sizes and p grid must be non-empty")
        for p in self.p_grid:
            if not 0.0 <= p <= 0.5:
                raise ValueError(f"p = {p} outside [0, 0.5]")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.backend not in ("exact", "transfer", "sampled"):
            raise ValueError(f"unknown backend {self.backend!r}")
        for spec in self.observables:
            for L in self.sizes:
                spec.validate(L)

    def echo(self) -> dict:
        return {"observables": [[s.kind, s.tag()] for s in self.observables], "sizes": list(self.sizes),
                "p_grid": list(self.p_grid), "backend": self.backend, "samples": self.samples,
                "seed": self.seed}

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.echo(), sort_keys=True).encode()).hexdigest()


def _geom_value(text: str):
    text = text.strip()
    try:
        return json.loads(text, parse_float=float, object_pairs_hook=None)
    except json.JSONDecodeError:
        return text


def _freeze(v):
    return tuple(_freeze(x) for x in v) if isinstance(v, list) else v


def load_config(path) -> configparser.ConfigParser:
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise FileNotFoundError(path)
    return cp


# --- scan ----------------------------------------------------------------------

@dataclass(frozen=True)
class Cell:
    spec: ObservableSpec
    obs_index: int
    L: int
    p_index: int
    p: float


def cell_seed(master: int, cell: Cell) -> np.random.SeedSequence:
    return np.random.SeedSequence(master, spawn_key=(cell.L, cell.p_index, cell.obs_index))


def cells_of(cfg: ExperimentConfig) -> list[Cell]:
    return [Cell(spec, oi, L, pi, p)
            for oi, spec in enumerate(cfg.observables)
            for L in cfg.sizes
            for pi, p in enumerate(cfg.p_grid)]


def run_cell(args) -> list[Row]:
    cell, cfg = args
    ss = cell_seed(cfg.seed, cell)
    seed_int = int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
    spec = ObservableSpec(cell.spec.kind, tuple((k, _freeze(v)) for k, v in cell.spec.geometry),
                          cell.spec.model)
    try:
        results = evaluate(spec, cell.L, cell.p, cfg.backend, cfg.samples, np.random.default_rng(ss))
    except (BudgetError, ValueError) as exc:
        log.warning("cell %s L=%d p=%r skipped: %s", spec.kind, cell.L, cell.p, exc)
        return [Row(spec.model, cell.L, cell.p, name, spec.tag(), math.nan, math.nan, 0,
                    "budget-error", seed_int) for name in run_shape(cell)]
    return [Row(spec.model, cell.L, cell.p, name, spec.tag(), est.mean, est.stderr, est.n_samples,
                est.method, seed_int) for name, est in results]


def _manifest(command: str, cfg_echo: dict, seed, files: dict, started: str) -> dict:
    return {
        "command": command,
        "config": cfg_echo,
        "master_seed": seed,
        "code_version": __version__,
        "convention_version": CONVENTION_VERSION,
        "seed_stream_version": SEED_STREAM_VERSION,
        "started": started,
        "finished": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "outputs": {name: file_digest(p) for name, p in files.items()},
    }


def scan(cfg: ExperimentConfig, jobs: int = 1, resume: bool = False, fail_after: int | None = None) -> Path:
    """Run every cell and write ``scan.csv`` plus ``manifest.json`` under ``cfg.out``.

    ``fail_after`` stops after that many cells (used to test resume).
    """
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "scan.csv"
    started = _dt.datetime.now(_dt.timezone.utc).isoformat()
    cells = cells_of(cfg)
    done_cells = 0
    if resume and csv_path.exists():
        man_path = out / "manifest.json"
        if man_path.exists():
            prior = json.loads(man_path.read_text()).get("config_digest")
            if prior is not None and prior != cfg.digest():
                raise ValueError("resume: config differs from the partial run")
        rows = complete_rows(csv_path)
        per_cell = [len(run_shape(c)) for c in cells]
        kept = 0
        while done_cells < len(cells) and kept + per_cell[done_cells] <= len(rows):
            kept += per_cell[done_cells]
            done_cells += 1
        csv_path.write_text(header_line() + "".join(format_line(r) for r in rows[:kept]))
    else:
        csv_path.write_text(header_line())
    (out / "manifest.json").write_text(json.dumps(
        {"command": "scan", "config": cfg.echo(), "config_digest": cfg.digest(), "partial": True},
        indent=1, sort_keys=True))
    todo = cells[done_cells:]
    if fail_after is not None:
        todo = todo[:fail_after]
    work = [(c, cfg) for c in todo]
    with open(csv_path, "a", newline="") as fh:
        if jobs > 1 and len(work) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                for rows in pool.map(run_cell, work):
                    fh.writelines(format_line(r) for r in rows)
                    fh.flush()
        else:
            for item in work:
                fh.writelines(format_line(r) for r in run_cell(item))
                fh.flush()
    if fail_after is not None and done_cells + len(todo) < len(cells):
        return csv_path
    man = _manifest("scan", cfg.echo(), cfg.seed, {"scan.csv": csv_path}, started)
    man["config_digest"] = cfg.digest()
    (out / "manifest.json").write_text(json.dumps(man, indent=1, sort_keys=True))
    return csv_path


def run_shape(cell: Cell) -> tuple:
    """Observable names a cell emits (fixes the row count per cell for resume)."""
    k = cell.spec.kind
    return (k + "/state", k + "/rbim") if k.startswith("anyon-avg") else (k,)


# --- commands ------------------------------------------------------------------

def cmd_verify(args) -> int:
    from .quantum.checks import run_suite

    reports = run_suite(args.filter, args.inject_fault)
    failed = [r for r in reports if not r.passed]
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.name} {json.dumps(r.params, sort_keys=True)} deviation={r.deviation:.3e}")
    print(f"{len(reports) - len(failed)}/{len(reports)} checks passed")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        doc = [{"name": r.name, "params": r.params, "deviation": r.deviation, "passed": r.passed}
               for r in reports]
        (out / "verify.json").write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return EXIT_FAIL if failed or not reports else EXIT_OK


def cmd_scan(args) -> int:
    cfg = ExperimentConfig.from_parser(load_config(args.config), args.seed, args.out)
    path = scan(cfg, args.jobs, args.resume, args.stop_after)
    print(path)
    return EXIT_OK


def cmd_thresholds(args) -> int:
    for name, value, note in threshold_table():
        print(f"{name:34s} {value:.10f}  {note}")
    return EXIT_OK


def _load_rows(path: Path):
    if path.suffix == ".json":
        return from_json(path.read_text())
    return read_csv(path)


def cmd_export(args) -> int:
    src = Path(args.input)
    if not src.exists():
        print(f"error: input not found: {src}", file=sys.stderr)
        return EXIT_USAGE
    rows = _load_rows(src)
    text = {"csv": to_csv_text, "json": to_json, "gnuplot-dat": to_gnuplot}[args.format](rows)
    ext = {"csv": ".csv", "json": ".json", "gnuplot-dat": ".dat"}[args.format]
    if args.out:
        dest = Path(args.out)
        if dest.is_dir() or not dest.suffix:
            dest.mkdir(parents=True, exist_ok=True)
            dest = dest / (src.stem + ext)
        dest.write_text(text)
        print(dest)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def analyze_rows(rows, observable: str, p_range=None) -> dict:
    curves: dict = {}
    for r in rows:
        if r.observable != observable or math.isnan(r.mean):
            continue
        curves.setdefault(r.L, []).append((r.p, r.mean, r.stderr))
    if len(curves) < 2:
        raise ValueError(f"need at least two sizes of {observable!r}")
    data = {L: tuple(np.array(c) for c in zip(*sorted(v))) for L, v in curves.items()}
    res = crossing_find(data, p_range)
    return {"observable": observable, "p_range": list(p_range) if p_range else None, "found": res.found, "p_star": res.p_star, "err": res.err,
            "pairs": [list(x) for x in res.pairs], "roots": list(res.roots)}


def cmd_analyze(args) -> int:
    src = Path(args.input)
    if not src.exists():
        print(f"error: input not found: {src}", file=sys.stderr)
        return EXIT_USAGE
    doc = analyze_rows(_load_rows(src), args.observable, args.p_range)
    doc["inputs-hash"] = file_digest(src)
    text = json.dumps(doc, indent=1, sort_keys=True) + "\n"
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "analysis.json").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="toposep", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run the exact oracle identity suite")
    v.add_argument("--filter", default=None, help="only checks whose name contains NAME")
    v.add_argument("--out", default=None)
    v.add_argument("--inject-fault", default=None, help=argparse.SUPPRESS)
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("scan", help="run a configured observable scan")
    s.add_argument("--config", required=True)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--out", default=None)
    s.add_argument("--resume", action="store_true")
    s.add_argument("--stop-after", type=int, default=None, help=argparse.SUPPRESS)
    s.set_defaults(func=cmd_scan)

    t = sub.add_parser("thresholds", help="print the closed-form threshold table")
    t.set_defaults(func=cmd_thresholds)

    e = sub.add_parser("export", help="re-emit an estimate CSV as csv, json or gnuplot data")
    e.add_argument("input")
    e.add_argument("--format", choices=("csv", "json", "gnuplot-dat"), default="csv")
    e.add_argument("--out", default=None)
    e.set_defaults(func=cmd_export)

    a = sub.add_parser("analyze", help="locate the finite-size crossing of a scan")
    a.add_argument("input")
    a.add_argument("--observable", default="thooft2d")
    a.add_argument("--p-range", type=float, nargs=2, default=None, metavar=("LO", "HI"),
                   help="only use error rates in [LO, HI]")
    a.add_argument("--out", default=None)
    a.set_defaults(func=cmd_analyze)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
