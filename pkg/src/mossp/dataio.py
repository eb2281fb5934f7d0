"""File formats: LIBSVM sparse text, quadratic-constraint instance files, and
plain key=value config files.

All writers render floats with 17 significant digits so that parsing a written
file reproduces the in-memory values bit for bit.
"""

from __future__ import annotations

import io
import logging
from pathlib import Path
from typing import IO

import numpy as np
import scipy.sparse as sp

from .errors import ParseError
from .problems import Dataset, QuadEqInstance

log = logging.getLogger(__name__)


def _fmt(v: float) -> str:
    return f"{float(v):.17g}"


def libsvm_parse(source: IO[str] | str | Path, n_features: int | None = None) -> Dataset:
    """Parse LIBSVM sparse text: ``label idx:val idx:val ...`` per line.

    Indices are 1-based and must be strictly increasing within a line; blank
    lines and ``#`` comment lines are skipped.  The feature count defaults to
    the largest index seen and can be overridden (never below it).  Labels may
    be +/-1 directly, or {0, 1}, which are mapped to {-1, +1} (the mapping is
    logged).  Any malformed token raises ParseError with its line number.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            return libsvm_parse(fh, n_features)

    labels: list[float] = []
    label_lines: dict[float, int] = {}
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    max_index = 0
    row = 0
    for lineno, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        try:
            label = float(tokens[0])
        except ValueError:
            raise ParseError(f"non-numeric label {tokens[0]!r}", lineno) from None
        labels.append(label)
        label_lines.setdefault(label, lineno)
        prev_idx = 0
        for tok in tokens[1:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep:
                raise ParseError(f"expected index:value, got {tok!r}", lineno)
            try:
                idx = int(idx_s)
            except ValueError:
                raise ParseError(f"non-numeric feature index {idx_s!r}", lineno) from None
            if idx <= 0:
                raise ParseError(f"feature index must be positive, got {idx}", lineno)
            if idx <= prev_idx:
                raise ParseError(
                    f"feature indices must be strictly increasing, got {idx} after {prev_idx}",
                    lineno)
            try:
                val = float(val_s)
            except ValueError:
                raise ParseError(f"non-numeric feature value {val_s!r}", lineno) from None
            if not np.isfinite(val):
                raise ParseError(f"non-finite feature value {val_s!r}", lineno)
            prev_idx = idx
            rows.append(row)
            cols.append(idx - 1)
            vals.append(val)
        max_index = max(max_index, prev_idx)
        row += 1

    if row == 0:
        raise ParseError("no data rows found")
    n = max_index if n_features is None else int(n_features)
    if n < max_index:
        raise ParseError(f"n_features={n} is below the largest index seen ({max_index})")

    y = np.asarray(labels, dtype=float)
    uniq = set(np.unique(y).tolist())
    if uniq <= {-1.0, 1.0}:
        pass
    elif uniq <= {0.0, 1.0}:
        log.info("mapping labels {0, 1} -> {-1, +1}")
        y = np.where(y == 0.0, -1.0, 1.0)
    else:
        bad = sorted(uniq - {-1.0, 1.0})[0]
        raise ParseError(f"label {bad:g} is not in {{-1,+1}} or {{0,1}}", label_lines[bad])

    X = sp.csr_matrix((vals, (rows, cols)), shape=(row, n))
    return Dataset(X=X, y=y)


def write_libsvm(data: Dataset, path: str | Path) -> None:
    """Inverse of :func:`libsvm_parse`, used for fixtures and surrogates."""
    X = data.X.tocsr()
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(data.N):
            start, end = X.indptr[i], X.indptr[i + 1]
            feats = " ".join(f"{j + 1}:{_fmt(v)}" for j, v in
                             zip(X.indices[start:end], X.data[start:end]))
            label = "+1" if data.y[i] > 0 else "-1"
            fh.write(f"{label} {feats}\n".rstrip() + "\n")


def write_quadeq(inst: QuadEqInstance, path: str | Path, seed: int | None = None) -> None:
    """Instance file: first line ``n M``, then M rows ``q... | a... | b``.

    A comment sidecar line records the generation seed and the planted
    feasible point so a reloaded instance supports feasible initialization.
    """
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{inst.n} {inst.M}\n")
        seed_s = "none" if seed is None else str(seed)
        fh.write(f"# seed={seed_s} xstar=" + " ".join(_fmt(v) for v in inst.x_star) + "\n")
        for j in range(inst.M):
            fh.write(" ".join(_fmt(v) for v in inst.q[j]) + " | "
                     + " ".join(_fmt(v) for v in inst.a[j]) + " | "
                     + _fmt(inst.b[j]) + "\n")


def read_quadeq(path: str | Path) -> QuadEqInstance:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.readlines()
    header = None
    x_star = None
    body: list[tuple[int, str]] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if "xstar=" in line:
                x_star = np.array([float(t) for t in line.split("xstar=", 1)[1].split()])
            continue
        if header is None:
            parts = line.split()
            if len(parts) != 2:
                raise ParseError("header must be 'n M'", lineno)
            header = (int(parts[0]), int(parts[1]))
            continue
        body.append((lineno, line))
    if header is None:
        raise ParseError("missing 'n M' header")
    n, M = header
    if len(body) != M:
        raise ParseError(f"expected {M} constraint rows, found {len(body)}")
    if x_star is None:
        raise ParseError("missing xstar sidecar line; regenerate the instance file")
    q = np.empty((M, n))
    a = np.empty((M, n))
    b = np.empty(M)
    for j, (lineno, line) in enumerate(body):
        segs = [s.split() for s in line.split("|")]
        if len(segs) != 3 or len(segs[0]) != n or len(segs[1]) != n or len(segs[2]) != 1:
            raise ParseError("expected 'q_1..q_n | a_1..a_n | b'", lineno)
        try:
            q[j] = [float(t) for t in segs[0]]
            a[j] = [float(t) for t in segs[1]]
            b[j] = float(segs[2][0])
        except ValueError:
            raise ParseError("non-numeric entry in constraint row", lineno) from None
    return QuadEqInstance(q=q, a=a, b=b, x_star=x_star)


def parse_config(source: IO[str] | str | Path) -> dict[str, str]:
    """Plain ``key = value`` lines; ``#`` starts a comment; later keys win."""
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and "=" not in source):
        with open(source, "r", encoding="utf-8") as fh:
            return parse_config(fh.read())
    if not isinstance(source, str):
        source = source.read()
    out: dict[str, str] = {}
    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ParseError(f"expected 'key = value', got {line!r}", lineno)
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise ParseError(f"empty key or value in {line!r}", lineno)
        out[key] = value
    return out


def format_config(cfg: dict[str, str]) -> str:
    return "".join(f"{k} = {v}\n" for k, v in cfg.items())
