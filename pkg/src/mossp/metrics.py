"""Delimited metrics output shared by all algorithms, plus benchmark summaries.

The metrics format is one header line

    iter,oracle_calls,elapsed_s,objective,feas,infeas_stat,crit_u,crit_gap,potential

followed by one row per diagnostic record, floats rendered with 17 significant
digits so the files parse back bit-exactly.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ParseError
from .solver import IterationRecord

METRICS_HEADER = "iter,oracle_calls,elapsed_s,objective,feas,infeas_stat,crit_u,crit_gap,potential"
SUMMARY_HEADER = ("algo,repeats,obj_mean,obj_std,obj_median,viol_mean,viol_std,viol_median,"
                  "oracle_calls_mean,elapsed_s_mean")


def _fmt(v: float) -> str:
    return f"{float(v):.17g}"


def write_metrics(records: Iterable[IterationRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(METRICS_HEADER + "\n")
        for r in records:
            fh.write(",".join([
                str(int(r.k)), str(int(r.oracle_calls)), _fmt(r.elapsed_s),
                _fmt(r.objective), _fmt(r.feas), _fmt(r.infeas_stat),
                _fmt(r.crit_u), _fmt(r.crit_gap), _fmt(r.potential),
            ]) + "\n")


def read_metrics(path: str | Path) -> list[IterationRecord]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != METRICS_HEADER:
        raise ParseError(f"{path}: missing or unexpected metrics header", line=1)
    out = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 9:
            raise ParseError(f"expected 9 fields, got {len(parts)}", lineno)
        try:
            out.append(IterationRecord(
                k=int(parts[0]), oracle_calls=int(parts[1]), elapsed_s=float(parts[2]),
                objective=float(parts[3]), feas=float(parts[4]), infeas_stat=float(parts[5]),
                crit_u=float(parts[6]), crit_gap=float(parts[7]), potential=float(parts[8]),
            ))
        except ValueError:
            raise ParseError("non-numeric field", lineno) from None
    return out


def summarize_finals(algo: str, per_seed_records: Sequence[Sequence[IterationRecord]]) -> dict:
    """Mean/std/median of final objective and violation across repeated runs.

    Std is the population standard deviation; with one repeat it is zero.
    """
    finals = [recs[-1] for recs in per_seed_records]
    obj = np.array([r.objective for r in finals])
    viol = np.array([r.feas for r in finals])
    return {
        "algo": algo,
        "repeats": len(finals),
        "obj_mean": float(obj.mean()),
        "obj_std": float(obj.std()),
        "obj_median": float(np.median(obj)),
        "viol_mean": float(viol.mean()),
        "viol_std": float(viol.std()),
        "viol_median": float(np.median(viol)),
        "oracle_calls_mean": float(np.mean([r.oracle_calls for r in finals])),
        "elapsed_s_mean": float(np.mean([r.elapsed_s for r in finals])),
    }


def write_summary(rows: Sequence[dict], path: str | Path) -> None:
    keys = SUMMARY_HEADER.split(",")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(SUMMARY_HEADER + "\n")
        for row in rows:
            rendered = []
            for key in keys:
                v = row[key]
                rendered.append(str(v) if isinstance(v, (str, int)) else _fmt(v))
            fh.write(",".join(rendered) + "\n")


def read_summary(path: str | Path) -> list[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != SUMMARY_HEADER:
        raise ParseError(f"{path}: missing or unexpected summary header", line=1)
    keys = SUMMARY_HEADER.split(",")
    out = []
    for line in lines[1:]:
        if not line.strip():
            continue
        parts = line.split(",")
        row = dict(zip(keys, parts))
        row["repeats"] = int(row["repeats"])
        for key in keys[2:]:
            row[key] = float(row[key])
        out.append(row)
    return out
