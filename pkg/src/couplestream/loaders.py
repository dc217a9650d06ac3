"""Loaders for the three supported real-dataset formats.

Each loader filters/binarizes as documented for its source, preserves
chronological (file) order, and windows the result into time batches.
No loader ever fabricates samples: row counts always reconcile with the
documented drops and interpolations.
"""

from __future__ import annotations

import csv

import numpy as np

from .datatypes import MultiTaskStream
from .errors import InputError


def _batch_times_fixed_count(n: int, batches: int, batch_size: int) -> np.ndarray:
    """First batches-1 windows get batch_size samples; the last takes the rest."""
    head = (batches - 1) * batch_size
    if n <= head:
        raise InputError(f"{n} samples cannot fill {batches} batches of {batch_size}")
    time = np.empty(n, dtype=np.int64)
    time[:head] = np.arange(head) // batch_size + 1
    time[head:] = batches
    return time


def _batch_times_fixed_size(n: int, batch_size: int) -> np.ndarray:
    """As many full batches as fit; the remainder joins the last batch."""
    if n < batch_size:
        raise InputError(f"{n} samples cannot fill one batch of {batch_size}")
    batches = n // batch_size
    return _batch_times_fixed_count(n, batches, batch_size)


# ---------------------------------------------------------------------------
# Gas sensor array drift records: "<gas>[;<concentration>] idx:value ..."
# ---------------------------------------------------------------------------

def parse_gas_records(files):
    """Yield (gas_code, feature_dict, origin) per record, in file order."""
    for path in files:
        with open(path) as f:
            for lineno, line in enumerate(f, start=1):
                line = line.strip()
                if not line:
                    continue
                origin = f"{path}:{lineno}"
                fields = line.split()
                head = fields[0].split(";", 1)[0]
                try:
                    gas = int(head)
                except ValueError:
                    raise InputError(f"{origin}: gas code {head!r} is not an integer") from None
                feats = {}
                for tok in fields[1:]:
                    try:
                        idx, val = tok.split(":", 1)
                        feats[int(idx)] = float(val)
                    except ValueError:
                        raise InputError(f"{origin}: malformed attribute {tok!r}") from None
                yield gas, feats, origin


def load_gsadd(files, positive_gas: int, negative_gas: int, drop_range=None,
               batch_size: int = 180, batches: int = 25) -> MultiTaskStream:
    """Single-task stream from gas-sensor drift record files.

    Keeps records of the two configured gas codes in chronological order,
    relabels them +1/-1, optionally removes a 1-based inclusive ordinal
    range from the positive class (size balancing), and windows into
    ``batches`` subsets of ``batch_size`` with the remainder in the last.
    """
    rows = []  # (label, feats)
    n_pos = 0
    dim = 0
    for gas, feats, origin in parse_gas_records(files):
        if gas == positive_gas:
            n_pos += 1
            if drop_range is not None and drop_range[0] <= n_pos <= drop_range[1]:
                continue
            rows.append((1, feats))
        elif gas == negative_gas:
            rows.append((-1, feats))
        if feats:
            dim = max(dim, max(feats))
    if not any(lbl == 1 for lbl, _ in rows):
        raise InputError(f"no samples with positive gas code {positive_gas}")
    if not any(lbl == -1 for lbl, _ in rows):
        raise InputError(f"no samples with negative gas code {negative_gas}")
    X = np.zeros((len(rows), dim))
    y = np.empty(len(rows), dtype=np.int64)
    for i, (lbl, feats) in enumerate(rows):
        y[i] = lbl
        for idx, val in feats.items():
            X[i, idx - 1] = val
    time = _batch_times_fixed_count(len(rows), batches, batch_size)
    return MultiTaskStream(X, y, np.ones(len(rows), dtype=np.int64), time, k=1, m=batches)


# ---------------------------------------------------------------------------
# Water quality weekly CSV: year, week, pH, DO, CODMn, NH3-N, grade, prev grade
# ---------------------------------------------------------------------------

WATER_COLUMNS = 8


def load_water_quality(path, binarize_threshold: int, batch_size: int = 4,
                       batches: int = 181) -> MultiTaskStream:
    """Single-task stream of the 4 water indicators; positive label means
    the weekly grade is at most ``binarize_threshold``."""
    feats, labels = [], []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        for lineno, row in enumerate(reader, start=1):
            if not row:
                continue
            if lineno == 1 and not _is_number(row[0]):
                continue  # header
            if len(row) != WATER_COLUMNS:
                raise InputError(f"line {lineno}: expected {WATER_COLUMNS} fields, got {len(row)}")
            try:
                feats.append([float(v) for v in row[2:6]])
            except ValueError as exc:
                raise InputError(f"line {lineno}: {exc}") from None
            try:
                grade = int(float(row[6]))
            except ValueError:
                raise InputError(f"line {lineno}: unparseable grade {row[6]!r}") from None
            labels.append(1 if grade <= binarize_threshold else -1)
    n = len(feats)
    if n != batches * batch_size:
        raise InputError(f"expected {batches * batch_size} rows ({batches} batches of {batch_size}), got {n}")
    time = np.arange(n, dtype=np.int64) // batch_size + 1
    return MultiTaskStream(np.asarray(feats), np.asarray(labels), np.ones(n, dtype=np.int64),
                           time, k=1, m=batches)


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


# ---------------------------------------------------------------------------
# Air quality hourly CSV (semicolon-separated, decimal commas, -200 missing)
# ---------------------------------------------------------------------------

AIR_INPUTS = ["PT08.S1(CO)", "PT08.S3(NOx)", "PT08.S4(NO2)", "PT08.S5(O3)", "T", "RH", "AH"]
AIR_TARGETS = ["C6H6(GT)", "PT08.S2(NMHC)"]
AIR_MISSING = -200.0


def load_air_quality(path, batch_size: int = 24):
    """Two single-task streams (one per output sensor) from the hourly
    air-quality CSV.

    The 7 non-target columns feed both streams; each target is binarized
    High/Low against its own post-interpolation column mean (High means
    strictly above). Missing values (-200 or blank) are filled with the
    mean of the nearest non-missing neighbors in time; batches hold
    ``batch_size`` rows with the remainder folded into the last batch.
    """
    columns = AIR_INPUTS + AIR_TARGETS
    with open(path, newline="") as f:
        reader = csv.reader(f, delimiter=";")
        try:
            header = next(reader)
        except StopIteration:
            raise InputError("empty air-quality CSV") from None
        header = [h.strip() for h in header]
        try:
            pos = {c: header.index(c) for c in columns}
        except ValueError as exc:
            raise InputError(f"missing column in air-quality CSV: {exc}") from None
        raw = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not v.strip() for v in row):
                continue
            vals = []
            for c in columns:
                v = row[pos[c]].strip().replace(",", ".")
                if not v:
                    vals.append(AIR_MISSING)
                    continue
                try:
                    vals.append(float(v))
                except ValueError:
                    raise InputError(f"line {lineno}: unparseable value {v!r} in {c}") from None
            raw.append(vals)
    if not raw:
        raise InputError("air-quality CSV has no data rows")
    data = np.asarray(raw)
    for j, name in enumerate(columns):
        data[:, j] = _interpolate_missing(data[:, j], name)

    n = data.shape[0]
    time = _batch_times_fixed_size(n, batch_size)
    X = data[:, : len(AIR_INPUTS)]
    streams = []
    for j, name in enumerate(AIR_TARGETS):
        col = data[:, len(AIR_INPUTS) + j]
        y = np.where(col > col.mean(), 1, -1).astype(np.int64)
        streams.append(MultiTaskStream(X, y, np.ones(n, dtype=np.int64), time, k=1, m=int(time.max())))
    return tuple(streams)


def _interpolate_missing(col: np.ndarray, name: str) -> np.ndarray:
    missing = col == AIR_MISSING
    if not missing.any():
        return col
    if missing[0]:
        raise InputError(f"column {name}: leading missing value has no previous neighbor")
    if missing[-1]:
        raise InputError(f"column {name}: trailing missing value has no next neighbor")
    col = col.copy()
    idx = np.flatnonzero(missing)
    ok = np.flatnonzero(~missing)
    prev = ok[np.searchsorted(ok, idx) - 1]
    nxt = ok[np.searchsorted(ok, idx)]
    col[idx] = (col[prev] + col[nxt]) / 2.0
    return col
