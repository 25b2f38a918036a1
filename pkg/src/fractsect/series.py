"""Price ingestion, log returns and the cumulative profile."""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass
from enum import Enum
from typing import BinaryIO, TextIO, Union

import numpy as np

from .errors import (EmptyInput, LagTooLarge, MalformedCsv, MissingColumn,
                     NonPositivePrice, WrongKind)


class Kind(str, Enum):
    PRICES = "prices"
    LOG_RETURNS = "log_returns"
    PROFILE = "profile"
    SYNTHETIC = "synthetic"


@dataclass(frozen=True, eq=False)
class Series:
    """A uniformly sampled scalar series tagged with what its values mean.

    ``values`` is stored as a read-only float64 copy.
    """

    values: np.ndarray
    kind: Kind
    label: str = ""
    t0_index: int = 0

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64, copy=True).ravel()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "kind", Kind(self.kind))
        if not np.all(np.isfinite(vals)):
            raise ValueError("series values must be finite")
        min_len = 2 if self.kind is Kind.PRICES else 1
        if vals.size < min_len:
            raise ValueError(f"{self.kind.value} series needs at least {min_len} values")
        if self.kind is Kind.PRICES and np.any(vals <= 0):
            raise ValueError("prices must be positive")

    def __len__(self):
        return self.values.size

    def with_values(self, values, kind, t0_index=None):
        return Series(values, kind, self.label,
                      self.t0_index if t0_index is None else t0_index)


@dataclass(frozen=True)
class SectorMeta:
    symbol: str
    name: str
    stock_count: int

    def __post_init__(self):
        if not self.symbol:
            raise ValueError("sector symbol must be nonempty")
        if self.stock_count < 1:
            raise ValueError("stock_count must be >= 1")


Source = Union[bytes, str, os.PathLike, BinaryIO, TextIO]


def _text_stream(source: Source) -> TextIO:
    if isinstance(source, (bytes, bytearray)):
        return io.StringIO(bytes(source).decode("utf-8-sig"))
    if isinstance(source, (str, os.PathLike)):
        return open(source, encoding="utf-8-sig", newline="")
    if isinstance(source, io.TextIOBase):
        return source
    return io.TextIOWrapper(source, encoding="utf-8-sig", newline="")


def load_series(source: Source, date_column: str = "Date",
                value_column: str = "Close", label: str = "") -> Series:
    """Read closing prices from a CSV with a header row.

    Rows are kept in file order with no gap filling; dates are not parsed
    and duplicates pass through. Row numbers in errors are 1-based data
    rows (the header is row 0).
    """
    stream = _text_stream(source)
    try:
        reader = csv.reader(stream)
        header = next(reader, None)
        if header is None or not any(h.strip() for h in header):
            raise EmptyInput("no header row")
        names = [h.strip() for h in header]
        for col in (date_column, value_column):
            if col not in names:
                raise MissingColumn(col)
        vi = names.index(value_column)
        values = []
        for row_no, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(names):
                raise MalformedCsv(row_no, f"expected {len(names)} fields, got {len(row)}")
            try:
                v = float(row[vi])
            except ValueError:
                raise MalformedCsv(row_no, f"cannot parse {row[vi]!r}") from None
            if not math.isfinite(v):
                raise MalformedCsv(row_no, f"non-finite value {row[vi]!r}")
            if v <= 0:
                raise NonPositivePrice(row_no, v)
            values.append(v)
    finally:
        if isinstance(source, (str, os.PathLike)):
            stream.close()
    if not values:
        raise EmptyInput("no data rows")
    if len(values) < 2:
        raise EmptyInput("need at least two prices")
    return Series(np.array(values), Kind.PRICES, label)


def log_returns(prices: Series, lag: int = 1) -> Series:
    """``out[t] = ln(p[t+lag]) - ln(p[t])``."""
    if prices.kind is not Kind.PRICES:
        raise WrongKind(f"log_returns needs prices, got {prices.kind.value}")
    if lag < 1 or lag >= len(prices):
        raise LagTooLarge(f"lag {lag} invalid for length {len(prices)}")
    logp = np.log(prices.values)
    return prices.with_values(logp[lag:] - logp[:-lag], Kind.LOG_RETURNS,
                              prices.t0_index + lag)


def profile(x: Series) -> Series:
    """Cumulative sum of deviations from the full-series mean."""
    if x.kind not in (Kind.LOG_RETURNS, Kind.SYNTHETIC):
        raise WrongKind(f"profile needs returns or synthetic increments, got {x.kind.value}")
    vals = x.values
    return x.with_values(np.cumsum(vals - vals.mean()), Kind.PROFILE)


def write_tsv(series: Series, stream: TextIO) -> None:
    """Write ``index<TAB>value`` rows with 17 significant digits."""
    stream.write("index\tvalue\n")
    for i, v in enumerate(series.values):
        stream.write(f"{series.t0_index + i}\t{v:.17g}\n")


def read_tsv(source: Source, kind: Kind = Kind.SYNTHETIC, label: str = "") -> Series:
    """Inverse of :func:`write_tsv`."""
    stream = _text_stream(source)
    try:
        lines = [ln for ln in stream.read().splitlines() if ln and not ln.startswith("#")]
    finally:
        if isinstance(source, (str, os.PathLike)):
            stream.close()
    if not lines:
        raise EmptyInput("empty TSV")
    if lines[0].split("\t") != ["index", "value"]:
        raise MalformedCsv(0, "expected header 'index\\tvalue'")
    idx = []
    vals = []
    for row_no, line in enumerate(lines[1:], start=1):
        parts = line.split("\t")
        if len(parts) != 2:
            raise MalformedCsv(row_no, "expected two tab-separated fields")
        try:
            idx.append(int(parts[0]))
            vals.append(float(parts[1]))
        except ValueError:
            raise MalformedCsv(row_no, f"cannot parse {line!r}") from None
    if not vals:
        raise EmptyInput("no data rows")
    if kind is Kind.PRICES:
        for row_no, v in enumerate(vals, start=1):
            if v <= 0:
                raise NonPositivePrice(row_no, v)
    return Series(np.array(vals), kind, label, idx[0])
