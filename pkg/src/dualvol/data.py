"""Reading numeric tables into design matrices and regression datasets."""

from __future__ import annotations

import csv
import hashlib
from pathlib import Path

import numpy as np

from .design import RegressionDataset
from .errors import DomainError
from .linalg import DesignMatrix

FORMATS = ("csv", "tsv", "whitespace")
ORIENTATIONS = ("samples-as-rows", "columns-as-given")


class LoadError(ValueError):
    """A table could not be parsed; ``row``/``col`` are 1-based data positions."""

    def __init__(self, message: str, row: int | None = None, col: int | None = None):
        super().__init__(message)
        self.row, self.col = row, col

    def to_dict(self) -> dict:
        return {"type": "LoadError", "message": str(self), "row": self.row, "col": self.col}


def read_table(path, fmt: str = "csv", has_header: bool = False) -> tuple[list[str] | None, np.ndarray]:
    if fmt not in FORMATS:
        raise DomainError(f"unknown format {fmt!r}; choose from {FORMATS}")
    text = Path(path).read_text()
    if fmt == "whitespace":
        rows = [line.split() for line in text.splitlines() if line.strip()]
    else:
        delim = "," if fmt == "csv" else "\t"
        rows = [[c.strip() for c in r] for r in csv.reader(text.splitlines(), delimiter=delim) if any(c.strip() for c in r)]
    header = None
    if has_header and rows:
        header, rows = rows[0], rows[1:]
    if not rows:
        raise LoadError("table has no data rows")
    width = len(rows[0])
    values = np.empty((len(rows), width))
    for r, row in enumerate(rows, start=1):
        if len(row) != width:
            raise LoadError(f"row {r} has {len(row)} fields, expected {width}", row=r)
        for c, cell in enumerate(row, start=1):
            try:
                values[r - 1, c - 1] = float(cell)
            except ValueError:
                raise LoadError(f"non-numeric cell {cell!r} at row {r}, column {c}", row=r, col=c) from None
    if not np.all(np.isfinite(values)):
        r, c = np.argwhere(~np.isfinite(values))[0] + 1
        raise LoadError(f"non-finite value at row {r}, column {c}", row=int(r), col=int(c))
    return header, values


def _response_index(header: list[str] | None, width: int, response) -> int:
    if response is None:
        return width - 1
    if isinstance(response, str) and not response.lstrip("-").isdigit():
        if header is None or response not in header:
            raise LoadError(f"response column {response!r} not found in header")
        return header.index(response)
    idx = int(response)
    idx = idx - 1 if idx > 0 else width + idx
    if not 0 <= idx < width:
        raise LoadError(f"response column {response} out of range for {width} columns")
    return idx


def load_matrix(path, fmt: str = "csv", has_header: bool = False,
                orientation: str = "columns-as-given", response=None, with_response: bool = False,
                standardize: bool = False):
    """Load a table as a DesignMatrix, or a RegressionDataset when ``with_response``.

    ``samples-as-rows`` tables are transposed so samples become columns of A.
    ``response`` names the response column (header name, 1-based index, or a
    negative index); the last column is used by default.
    """
    if orientation not in ORIENTATIONS:
        raise DomainError(f"unknown orientation {orientation!r}; choose from {ORIENTATIONS}")
    header, values = read_table(path, fmt, has_header)
    if with_response:
        if orientation != "samples-as-rows":
            values = values.T
            header = None
        j = _response_index(header, values.shape[1], response)
        y = values[:, j]
        X = np.delete(values, j, axis=1)
        return RegressionDataset(X, y, standardize=standardize)
    A = values.T if orientation == "samples-as-rows" else values
    return DesignMatrix(A)


def fingerprint(*arrays: np.ndarray) -> str:
    h = hashlib.sha256()
    for a in arrays:
        a = np.ascontiguousarray(a, dtype=np.float64)
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()
