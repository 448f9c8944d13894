"""CSV ingestion for the command-line tools."""

import csv
from dataclasses import dataclass
from importlib import resources

import numpy as np


class DataError(Exception):
    """Malformed or unusable input data (CLI exit code 2)."""


@dataclass
class Dataset:
    """Rectangular numeric table with per-column tie diagnostics."""

    column_names: list
    columns: list
    row_count: int
    tie_counts: list

    def column(self, key):
        """Column by name or 1-based index."""
        return self.columns[self.column_index(key)]

    def column_index(self, key):
        if isinstance(key, str) and key in self.column_names:
            return self.column_names.index(key)
        try:
            idx = int(key)
        except (TypeError, ValueError):
            raise DataError(f"unknown column {key!r}") from None
        if not 1 <= idx <= len(self.columns):
            raise DataError(f"column index {idx} out of range 1..{len(self.columns)}")
        return idx - 1


def load_csv(path, header=False, columns=None):
    """Parse a comma-separated numeric file.

    ``columns`` selects a subset by name (requires a header) or 1-based
    index; only selected cells must be numeric. Ragged rows, non-numeric
    cells and empty files raise DataError naming the 1-based row and column.
    """
    try:
        with open(path, "r", encoding="utf-8-sig", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if not rows:
        raise DataError(f"{path}: empty file")
    if header:
        names = [cell.strip() for cell in rows[0]]
        data_rows = rows[1:]
        first_data_line = 2
        if not data_rows:
            raise DataError(f"{path}: header but no data rows")
    else:
        names = [f"col{i}" for i in range(1, len(rows[0]) + 1)]
        data_rows = rows
        first_data_line = 1
    width = len(names)
    for i, row in enumerate(data_rows):
        if len(row) != width:
            raise DataError(
                f"{path}: row {first_data_line + i} has {len(row)} cells, expected {width}"
            )
    if columns is not None:
        sel = []
        for key in columns:
            if isinstance(key, str) and key in names:
                sel.append(names.index(key))
                continue
            try:
                idx = int(key)
            except (TypeError, ValueError):
                raise DataError(f"unknown column {key!r}") from None
            if not 1 <= idx <= width:
                raise DataError(f"column index {idx} out of range 1..{width}")
            sel.append(idx - 1)
    else:
        sel = list(range(width))
    cols = []
    for j in sel:
        vals = np.empty(len(data_rows))
        for i, row in enumerate(data_rows):
            cell = row[j].strip()
            try:
                vals[i] = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: non-numeric cell {cell!r} at row {first_data_line + i}, "
                    f"column {j + 1}"
                ) from None
        cols.append(vals)
    return Dataset(
        column_names=[names[j] for j in sel],
        columns=cols,
        row_count=len(data_rows),
        tie_counts=[int(c.size - np.unique(c).size) for c in cols],
    )


def wine_path():
    """Bundled UCI wine file: class label plus 13 measurements, no header."""
    return resources.files("hetcorr").joinpath("data/wine.csv")


WINE_COLUMN_NAMES = [
    "class",
    "alcohol",
    "malic_acid",
    "ash",
    "alcalinity_of_ash",
    "magnesium",
    "total_phenols",
    "flavanoids",
    "nonflavanoid_phenols",
    "proanthocyanins",
    "color_intensity",
    "hue",
    "od280_od315",
    "proline",
]


def load_wine():
    """The bundled wine dataset with its conventional column names."""
    ds = load_csv(str(wine_path()), header=False)
    if len(ds.columns) != len(WINE_COLUMN_NAMES):
        raise DataError("bundled wine file has unexpected shape")
    ds.column_names = list(WINE_COLUMN_NAMES)
    return ds
