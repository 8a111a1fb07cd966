"""CSV persistence for three-phase records (``t_s,va,vb,vc,ia,ib,ic``)."""

from __future__ import annotations

import csv
import os
from typing import Union

import numpy as np

from .powersys import CHANNELS, ThreePhaseRecord

HEADER = ("t_s",) + CHANNELS
PathLike = Union[str, os.PathLike]


class RecordFormatError(ValueError):
    pass


class ColumnError(RecordFormatError):
    pass


class MalformedRowError(RecordFormatError):
    pass


class TimestepError(RecordFormatError):
    pass


class RecordTooShortError(RecordFormatError):
    pass


def write_record(record: ThreePhaseRecord, path: PathLike) -> None:
    data = np.vstack([record.t] + [record.channel(c) for c in CHANNELS]).T
    with open(path, "w", newline="") as fh:
        fh.write(",".join(HEADER) + "\n")
        for row in data:
            fh.write(",".join(format(x, ".17g") for x in row) + "\n")


def read_record(path: PathLike, fundamental: float = 60.0, step_rtol: float = 1e-6) -> ThreePhaseRecord:
    """Parse a record file, inferring the sample rate from the time column.

    ``meta["nominal_rate"]`` is set when the rate is within 0.1 % of 128
    samples per cycle.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise RecordFormatError(f"{path}: empty file") from None
        if tuple(header) != HEADER:
            raise ColumnError(f"{path}: expected columns {','.join(HEADER)}, got {','.join(header)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(HEADER):
                raise MalformedRowError(f"{path}:{lineno}: expected {len(HEADER)} fields, got {len(row)}")
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                raise MalformedRowError(f"{path}:{lineno}: non-numeric field in {row!r}") from None
    if len(rows) < 2:
        raise RecordTooShortError(f"{path}: need at least two samples, got {len(rows)}")
    data = np.array(rows)
    t = data[:, 0]
    dt = np.diff(t)
    if np.any(dt <= 0):
        bad = int(np.argmax(dt <= 0)) + 2
        raise TimestepError(f"{path}: time column not increasing at row {bad}")
    step = (t[-1] - t[0]) / (len(t) - 1)
    if np.max(np.abs(dt - step)) > step_rtol * step:
        bad = int(np.argmax(np.abs(dt - step))) + 2
        raise TimestepError(f"{path}: non-uniform time step at row {bad} ({dt[bad - 2]!r} vs {step!r})")
    fs = 1.0 / step
    if len(t) * step < 2.0 / fundamental * (1 - 1e-9):
        raise RecordTooShortError(
            f"{path}: record spans {len(t) * step:.6g} s, shorter than two cycles at {fundamental} Hz"
        )
    spc = fs / fundamental
    meta = {
        "source": os.fspath(path),
        "samples_per_cycle": int(round(spc)),
        "nominal_rate": abs(spc - 128) / 128 < 1e-3,
    }
    return ThreePhaseRecord(fs, fundamental, *data[:, 1:].T, meta=meta)
