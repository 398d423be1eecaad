"""Serialization: spectral elements, trajectories, masks, matrices, reports.

All CSV/JSON node and actuator labels are 1-based node ids. Floats are
serialized with repr (17 significant digits), so outputs round-trip
bit-exactly. Writes go through a temp file and an atomic rename.
"""

from __future__ import annotations

import csv
import io as _io
import json
import os
from pathlib import Path

import numpy as np

from .constraints import SupportSpec
from .meso import MemoryReport, MesoReport, MessageLog
from .simulate import Trajectory
from .spectral import FIRPair


def atomic_write_text(path: Path | str, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def write_json(path: Path | str, obj):
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _fmt(value: float) -> str:
    return repr(float(value))


# -- spectral pairs ----------------------------------------------------------

def pair_to_json(pair: FIRPair) -> dict:
    records = []
    for k in range(pair.m_start, pair.horizon + 1):
        rec = {"k": k, "M": pair.M(k).tolist()}
        if k >= 1:
            rec["R"] = pair.R(k).tolist()
        records.append(rec)
    return {"horizon": pair.horizon, "causality": pair.causality,
            "n": pair.n, "m": pair.m, "elements": records}


def pair_from_json(obj: dict) -> FIRPair:
    horizon = int(obj["horizon"])
    causality = obj["causality"]
    n, m = int(obj["n"]), int(obj["m"])
    R = {k: np.zeros((n, n)) for k in range(1, horizon + 1)}
    k0 = 0 if causality == "causal" else 1
    M = {k: np.zeros((m, n)) for k in range(k0, horizon + 1)}
    for rec in obj["elements"]:
        k = int(rec["k"])
        if "R" in rec and k >= 1:
            R[k] = np.array(rec["R"], dtype=float)
        if "M" in rec:
            M[k] = np.array(rec["M"], dtype=float)
    return FIRPair(horizon, R, M, causality)


def elements_csv(pair: FIRPair, which: str,
                 actuated: tuple[int, ...] | None = None) -> str:
    """Long-format CSV (k,row,col,which,value) for the R or M elements.

    Rows and cols are 1-based; M rows are labelled by the actuator's node id
    when `actuated` is given, otherwise by actuator ordinal.
    """
    if which not in ("R", "M"):
        raise ValueError(f"which must be 'R' or 'M', got {which!r}")
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["k", "row", "col", "which", "value"])
    elems = pair.R_elems if which == "R" else pair.M_elems
    for k in sorted(elems):
        mat = elems[k]
        for r, c in np.argwhere(mat != 0):
            row_label = actuated[r] if (which == "M" and actuated) else int(r) + 1
            writer.writerow([k, row_label, int(c) + 1, which, _fmt(mat[r, c])])
    return buf.getvalue()


# -- trajectories and messages -----------------------------------------------

def trajectory_csv(traj: Trajectory, actuated: tuple[int, ...] | None = None) -> str:
    """Tidy CSV (t, signal, node, value); u rows carry the actuator's node id."""
    m = traj.u.shape[1]
    if actuated is None:
        actuated = tuple(range(1, m + 1))
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "signal", "node", "value"])

    def block(name, arr, labels):
        for t in range(arr.shape[0]):
            for idx in range(arr.shape[1]):
                writer.writerow([t, name, labels[idx], _fmt(arr[t, idx])])

    nodes = tuple(range(1, traj.n + 1))
    block("x", traj.x, nodes)
    block("u", traj.u, actuated)
    block("w", traj.w, nodes)
    if traj.delta_hat is not None:
        block("delta_hat", traj.delta_hat, nodes)
    if traj.x_hat is not None:
        block("x_hat", traj.x_hat, nodes)
    return buf.getvalue()


def messages_csv(log: MessageLog) -> str:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t_send", "t_deliver", "from", "to", "value"])
    for msg in log.messages:
        writer.writerow([msg.t_send, msg.t_deliver, msg.sender, msg.receiver,
                         _fmt(msg.value)])
    return buf.getvalue()


# -- masks, matrices, reports --------------------------------------------------

def support_csv(spec: SupportSpec) -> str:
    """CSV of allowed entries (k,row,col,which); M rows use actuator node ids
    when the provenance records them."""
    act = spec.provenance.get("actuated")
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["k", "row", "col", "which"])
    for k in sorted(spec.R_masks):
        for r, c in np.argwhere(spec.R_masks[k]):
            writer.writerow([k, int(r) + 1, int(c) + 1, "R"])
    for k in sorted(spec.M_masks):
        for r, c in np.argwhere(spec.M_masks[k]):
            row_label = act[r] if act else int(r) + 1
            writer.writerow([k, row_label, int(c) + 1, "M"])
    return buf.getvalue()


def matrix_csv(mat: np.ndarray) -> str:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in np.atleast_2d(mat):
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def census_json(report: MesoReport) -> dict:
    return {
        "forward_paths": report.forward_paths,
        "predictive_ifps": report.predictive_ifps,
        "communicative_ifps": report.communicative_ifps,
        "total_ifps": report.predictive_ifps + report.communicative_ifps,
        "ratio_total_ifp_to_forward": report.ratio_total_ifp_to_forward
        if report.ratio_total_ifp_to_forward is not None else "no forward paths",
        "memory_total": report.memory_total,
        "redundancy": {str(k): v for k, v in sorted(report.redundancy.items())},
    }


def memory_json(report: MemoryReport) -> dict:
    return {
        "per_node": {str(node): [list(pair) for pair in patch]
                     for node, patch in sorted(report.per_node.items())},
        "total": report.total,
        "per_disturbance_copies": {str(k): v for k, v in
                                   sorted(report.per_disturbance_copies.items())},
    }


# -- sparsity renderings -------------------------------------------------------

def sparsity_grid(mat: np.ndarray, tol: float = 1e-9) -> str:
    """Plain-text sparsity pattern: 'X' above tol, '.' otherwise."""
    lines = []
    for row in np.atleast_2d(mat):
        lines.append(" ".join("X" if abs(v) > tol else "." for v in row))
    return "\n".join(lines) + "\n"


def sparsity_svg(mat: np.ndarray, tol: float = 1e-9, cell: int = 24) -> str:
    """Minimal static SVG heatmap; darkness scales with log-magnitude."""
    mat = np.atleast_2d(mat)
    rows, cols = mat.shape
    peak = float(np.max(np.abs(mat))) if mat.size else 0.0
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" '
             f'width="{cols * cell}" height="{rows * cell}">']
    for r in range(rows):
        for c in range(cols):
            v = abs(float(mat[r, c]))
            if v > tol and peak > 0:
                rel = max(0.0, 1.0 - np.log10(peak / v) / 6.0) if v < peak else 1.0
                shade = int(235 - 215 * rel)
                fill = f"rgb({shade},{shade},235)"
            else:
                fill = "white"
            parts.append(f'<rect x="{c * cell}" y="{r * cell}" width="{cell}" '
                         f'height="{cell}" fill="{fill}" stroke="#999"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
