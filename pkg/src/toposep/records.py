"""Shared CSV estimate schema, export formats and disorder-sample persistence."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .lattice import CONVENTION_VERSION

COLUMNS = ("model", "L", "p", "observable", "geometry-tag", "mean", "stderr", "n_samples", "method", "seed")
SCHEMA_DOC = (
    "model: statistical model kind",
    "L: linear lattice size",
    "p: phase-flip error rate",
    "observable: observable kind (suffix /state or /rbim for the two condensation sides)",
    "geometry-tag: semicolon-separated geometry arguments",
    "mean, stderr: estimate and its standard error (0 for exact methods)",
    "n_samples: disorder samples (1 for exact methods)",
    "method: exact-enumeration | transfer | mc-disorder | budget-error",
    "seed: per-cell seed derived from the master seed",
)


@dataclass(frozen=True)
class Row:
    model: str
    L: int
    p: float
    observable: str
    geometry_tag: str
    mean: float
    stderr: float
    n_samples: int
    method: str
    seed: int

    def cells(self) -> list[str]:
        return [self.model, str(self.L), repr(float(self.p)), self.observable, self.geometry_tag,
                repr(float(self.mean)), repr(float(self.stderr)), str(self.n_samples), self.method,
                str(self.seed)]

    @classmethod
    def parse(cls, cells) -> "Row":
        if len(cells) != len(COLUMNS):
            raise ValueError(f"expected {len(COLUMNS)} columns, got {len(cells)}")
        m, L, p, obs, tag, mean, err, n, method, seed = cells
        return cls(m, int(L), float(p), obs, tag, float(mean), float(err), int(n), method, int(seed))

    def as_dict(self) -> dict:
        d = asdict(self)
        d["geometry-tag"] = d.pop("geometry_tag")
        return {c: d[c] for c in COLUMNS}

    @classmethod
    def from_dict(cls, d: dict) -> "Row":
        return cls(d["model"], int(d["L"]), float(d["p"]), d["observable"], d["geometry-tag"],
                   float(d["mean"]), float(d["stderr"]), int(d["n_samples"]), d["method"], int(d["seed"]))


def format_line(row: Row) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerow(row.cells())
    return buf.getvalue()


def header_line() -> str:
    return ",".join(COLUMNS) + "\n"


def write_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(header_line())
        for r in rows:
            fh.write(format_line(r))


def read_csv(path) -> list[Row]:
    """Rows of a CSV in the shared schema; ``#`` comment lines are skipped."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    head = next(reader, None)
    if head is None or tuple(head) != COLUMNS:
        raise ValueError(f"{path}: not a toposep estimate CSV")
    return [Row.parse(c) for c in reader if c]


def complete_rows(path) -> list[Row]:
    """Rows of a possibly truncated CSV: a trailing partial line is dropped."""
    text = Path(path).read_text()
    if not text.startswith(header_line()):
        raise ValueError(f"{path}: not a toposep estimate CSV")
    body = text[len(header_line()):]
    if body and not body.endswith("\n"):
        body = body[: body.rfind("\n") + 1]
    rows = []
    for cells in csv.reader(io.StringIO(body)):
        try:
            rows.append(Row.parse(cells))
        except ValueError:
            break
    return rows


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# --- export formats ----------------------------------------------------------

def to_json(rows) -> str:
    return json.dumps({"columns": list(COLUMNS), "rows": [r.as_dict() for r in rows]}, indent=1) + "\n"


def from_json(text: str) -> list[Row]:
    data = json.loads(text)
    if tuple(data.get("columns", ())) != COLUMNS:
        raise ValueError("not a toposep estimate JSON document")
    return [Row.from_dict(d) for d in data["rows"]]


def to_gnuplot(rows) -> str:
    """Whitespace table grouped by (observable, L); blocks separated by a blank line."""
    out = ["# toposep estimates, one block per (observable, L)"]
    out += [f"# {line}" for line in SCHEMA_DOC]
    out.append("# columns: p mean stderr n_samples")
    groups: dict = {}
    for r in rows:
        groups.setdefault((r.observable, r.geometry_tag, r.model, r.L), []).append(r)
    for (obs, tag, model, L), rs in groups.items():
        out.append("")
        out.append(f"# observable={obs} model={model} L={L} geometry={tag}")
        for r in rs:
            out.append(f"{r.p!r} {r.mean!r} {r.stderr!r} {r.n_samples}")
    return "\n".join(out) + "\n"


def to_csv_text(rows) -> str:
    return header_line() + "".join(format_line(r) for r in rows)


# --- disorder samples --------------------------------------------------------

def save_samples(path, signs, header: dict) -> None:
    """Store +-1 sign rows bit-packed together with a JSON header."""
    s = np.asarray(signs)
    if s.ndim != 2:
        raise ValueError("signs must be a 2d array (samples x terms)")
    bits = (s < 0).astype(np.uint8)
    meta = dict(header, n_samples=int(s.shape[0]), n_terms=int(s.shape[1]),
                convention_version=CONVENTION_VERSION)
    np.savez(path, bits=np.packbits(bits, axis=1), header=np.array(json.dumps(meta, sort_keys=True)))


def load_samples(path) -> tuple[np.ndarray, dict]:
    with np.load(path) as f:
        meta = json.loads(str(f["header"]))
        bits = np.unpackbits(f["bits"], axis=1, count=meta["n_terms"])
    if meta.get("convention_version") != CONVENTION_VERSION:
        raise ValueError("sample file written with a different lattice convention")
    return (1 - 2 * bits.astype(np.int8)), meta


def is_missing(x: float) -> bool:
    return isinstance(x, float) and math.isnan(x)
