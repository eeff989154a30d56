"""JSON and CSV formats for keys, plants, traces, reports and figure data.

Floats are written with ``repr``, the shortest decimal that round-trips.
"""
from __future__ import annotations

import csv
import io
import json
import sys
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np

from .cipher import (
    CipherVariant,
    KeyPair,
    KeyStream,
    OutputKeyPair,
    output_keygen,
)
from .plant import CloudPolicy, PlantModel, Trace

PathLike = Union[str, Path]


def fmt(v: float) -> str:
    return repr(float(v))


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2) + "\n"


# keys -----------------------------------------------------------------------

def key_document(stream: KeyStream) -> dict:
    """Key file for a stream.

    The stored matrices are the step-0 keys.  Deterministic keys are used as
    stored; probabilistic variants are regenerated from the seed on load.
    """
    kp = stream.keys_at(0)
    okp = stream.output_keys_at(0)
    return {
        "n": stream.n,
        "R": kp.R.tolist(),
        "r": kp.r.tolist(),
        "variant": stream.variant.value,
        "seed": stream.seed,
        "R_max": float(stream.R_max),
        "r_max": float(stream.r_max),
        "m": stream.m,
        "S": okp.S.tolist(),
        "s": okp.s.tolist(),
    }


def load_keys(doc: dict) -> Union[KeyStream, Tuple[KeyPair, OutputKeyPair]]:
    variant = CipherVariant(doc.get("variant", "Deterministic"))
    n = int(doc.get("n", len(doc.get("r", []))))
    seed = int(doc.get("seed", 0))
    R_max = float(doc.get("R_max", 1.0))
    r_max = float(doc.get("r_max", 1.0))
    m = int(doc.get("m", len(doc["s"]) if "s" in doc else n))
    if variant is not CipherVariant.DETERMINISTIC:
        return KeyStream(seed, R_max, r_max, variant, n, m)
    kp = KeyPair(doc["R"], doc["r"])
    if "S" in doc:
        okp = OutputKeyPair(doc["S"], doc["s"])
    else:
        okp = output_keygen(m, R_max, r_max, seed)
    return kp, okp


def load_plant(doc: dict) -> Tuple[PlantModel, CloudPolicy]:
    plant = PlantModel(doc["A"], doc["B"])
    K = doc.get("K", np.zeros((plant.m, plant.n)).tolist())
    policy = CloudPolicy(
        K,
        excitation=float(doc.get("excitation", 0.0)),
        excitation_seed=int(doc.get("excitation_seed", 0)),
    )
    return plant, policy


def read_json(path: PathLike) -> dict:
    with open(path) as fh:
        return json.load(fh)


# traces ---------------------------------------------------------------------

def trace_header(n: int, m: int) -> list[str]:
    return (
        ["k"]
        + [f"x_{i}" for i in range(n)]
        + [f"u_{i}" for i in range(m)]
        + [f"y_{i}" for i in range(n)]
        + [f"z_{i}" for i in range(m)]
    )


def trace_to_csv(trace: Trace) -> str:
    """One row per step; the final row has empty input fields (u, z have length T)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(trace_header(trace.n, trace.m))
    for k in range(trace.T + 1):
        has_u = k < trace.T
        row = [str(k)]
        row += [fmt(v) for v in trace.x[k]]
        row += [fmt(v) for v in trace.u[k]] if has_u else [""] * trace.m
        row += [fmt(v) for v in trace.y[k]]
        row += [fmt(v) for v in trace.z[k]] if has_u else [""] * trace.m
        w.writerow(row)
    return buf.getvalue()


def trace_from_csv(text: str, variant: CipherVariant = CipherVariant.DETERMINISTIC) -> Trace:
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    n = sum(h.startswith("x_") for h in header)
    m = sum(h.startswith("u_") for h in header)
    if header != trace_header(n, m):
        raise ValueError("unexpected trace header")
    x = np.array([[float(v) for v in r[1 : 1 + n]] for r in body])
    y = np.array([[float(v) for v in r[1 + n + m : 1 + 2 * n + m]] for r in body])
    inputs = [r for r in body if r[1 + n] != ""]
    u = np.array([[float(v) for v in r[1 + n : 1 + n + m]] for r in inputs]).reshape(-1, m)
    z = np.array([[float(v) for v in r[1 + 2 * n + m :]] for r in inputs]).reshape(-1, m)
    return Trace(x=x, u=u, y=y, z=z, variant=variant)


# figure data ----------------------------------------------------------------

def figure1_csv(table: np.ndarray) -> str:
    lines = ["value,probability"]
    lines += [f"{fmt(v)},{fmt(p)}" for v, p in table]
    return "\n".join(lines) + "\n"


def figure2_csv(axis: np.ndarray, D: np.ndarray, hex_bits: bool = False) -> str:
    if hex_bits:
        labels = [f"{b:04x}" for b in np.asarray(axis, dtype=np.float16).view(np.uint16)]
    else:
        labels = [fmt(v) for v in axis]
    lines = ["x1\\x2," + ",".join(labels)]
    for lab, row in zip(labels, D):
        lines.append(lab + "," + ",".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def _axis_label(text: str) -> float:
    if len(text) == 4 and not any(c in text for c in ".-"):
        try:
            return float(np.array([int(text, 16)], dtype=np.uint16).view(np.float16)[0])
        except ValueError:
            pass
    return float(text)


def figure2_from_csv(text: str) -> Tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`figure2_csv`; accepts decimal or 4-hex-digit labels."""
    rows = list(csv.reader(io.StringIO(text)))
    axis = np.array([_axis_label(v) for v in rows[0][1:]])
    D = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    return axis, D


def write_text(text: str, path: Optional[PathLike]) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    Path(path).write_text(text)
