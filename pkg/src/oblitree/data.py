"""Tabular data loading, encoding and splitting.

Raw delimited files become numeric datasets in two steps: categorical
columns are one-hot encoded (one binary column per distinct value) and
numeric columns are min-max mapped onto [0, 1].  A column counts as
categorical when any cell fails numeric parsing, unless an override
says otherwise.  The fitted encoder is serializable so saved trees can
be applied to new raw files later.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InvalidTargetError,
    MissingColumnError,
    ParseError,
    RaggedRowsError,
)


@dataclass
class RawTable:
    columns: list[str]
    rows: list[list[str]]
    target: str

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def feature_columns(self) -> list[str]:
        return [c for c in self.columns if c != self.target]

    def column_values(self, name: str) -> list[str]:
        try:
            j = self.columns.index(name)
        except ValueError:
            raise MissingColumnError(f"no column named {name!r}") from None
        return [row[j] for row in self.rows]

    def subset(self, indices) -> "RawTable":
        return RawTable(self.columns, [self.rows[i] for i in indices], self.target)


def load(path: str, target: str, delimiter: str = ",") -> RawTable:
    """Read a delimited text file with a header row.

    Raises FileNotFoundError for a missing file, RaggedRowsError when a
    row's length differs from the header, and MissingColumnError when
    the target column is absent.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            columns = next(reader)
        except StopIteration:
            raise RaggedRowsError(f"{path}: empty file")
        columns = [c.strip() for c in columns]
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(columns):
                raise RaggedRowsError(
                    f"{path}:{lineno}: expected {len(columns)} cells, got {len(row)}"
                )
            rows.append([cell.strip() for cell in row])
    if target not in columns:
        raise MissingColumnError(f"{path}: no column named {target!r}")
    return RawTable(columns=columns, rows=rows, target=target)


def load_column_overrides(path: str) -> dict[str, str]:
    """Read ``column=categorical|numerical`` lines."""
    overrides = {}
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            name, _, kind = line.partition("=")
            kind = kind.strip().lower()
            if kind not in ("categorical", "numerical"):
                raise ValueError(f"override for {name!r} must be categorical or numerical")
            overrides[name.strip()] = kind
    return overrides


def _is_number(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


@dataclass
class _ColumnSpec:
    name: str
    kind: str  # 'categorical' | 'numerical'
    categories: list[str] = field(default_factory=list)
    lo: float = 0.0
    hi: float = 1.0


@dataclass
class Dataset:
    """Encoded classification data: features in [0, 1], integer labels."""

    X: np.ndarray
    y: np.ndarray
    feature_names: list[str]
    class_names: list[str]

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=int)
        if self.X.shape[0] != self.y.shape[0]:
            raise ValueError("X and y row counts differ")
        if self.y.size and (self.y.min() < 0 or self.y.max() >= len(self.class_names)):
            raise ValueError("class index out of range")

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices, dtype=int)
        return Dataset(self.X[indices], self.y[indices], self.feature_names, self.class_names)


class TableEncoder:
    """Fitted column transforms: one-hot categories and min-max ranges."""

    def __init__(self):
        self.specs: list[_ColumnSpec] = []
        self.target: str | None = None
        self.class_names: list[str] = []
        self.feature_names: list[str] = []

    def fit(self, table: RawTable, overrides: dict[str, str] | None = None) -> "TableEncoder":
        overrides = overrides or {}
        classes = sorted(set(table.column_values(table.target)))
        if len(classes) < 2:
            raise InvalidTargetError(
                f"target column {table.target!r} has {len(classes)} distinct value(s); "
                "need at least 2"
            )
        self.target = table.target
        self.class_names = classes
        self.specs = []
        self.feature_names = []
        for name in table.feature_columns:
            values = table.column_values(name)
            kind = overrides.get(name)
            if kind is None:
                kind = "numerical" if all(_is_number(v) for v in values) else "categorical"
            if kind == "categorical":
                cats = sorted(set(values))
                self.specs.append(_ColumnSpec(name, "categorical", categories=cats))
                self.feature_names.extend(f"{name}={c}" for c in cats)
            else:
                try:
                    numeric = [float(v) for v in values]
                except ValueError as exc:
                    raise ParseError(f"column {name!r}: {exc}") from None
                lo = min(numeric) if numeric else 0.0
                hi = max(numeric) if numeric else 1.0
                self.specs.append(_ColumnSpec(name, "numerical", lo=lo, hi=hi))
                self.feature_names.append(name)
        return self

    def transform(self, table: RawTable, require_target: bool = True) -> Dataset:
        blocks = []
        for spec in self.specs:
            values = table.column_values(spec.name)
            if spec.kind == "categorical":
                block = np.zeros((len(values), len(spec.categories)))
                lookup = {c: k for k, c in enumerate(spec.categories)}
                for r, v in enumerate(values):
                    k = lookup.get(v)
                    if k is not None:  # unseen categories encode as all-zeros
                        block[r, k] = 1.0
            else:
                try:
                    numeric = np.array([float(v) for v in values])
                except ValueError as exc:
                    raise ParseError(f"column {spec.name!r}: {exc}") from None
                span = spec.hi - spec.lo
                if span <= 0:
                    block = np.zeros((len(values), 1))  # constant column maps to 0
                else:
                    block = ((numeric - spec.lo) / span).reshape(-1, 1)
            blocks.append(block)
        X = np.hstack(blocks) if blocks else np.zeros((table.n_rows, 0))
        if require_target:
            lookup = {c: k for k, c in enumerate(self.class_names)}
            y = np.array([lookup.get(v, -1) for v in table.column_values(self.target)])
            if np.any(y < 0):
                bad = sorted(
                    set(table.column_values(self.target)) - set(self.class_names)
                )
                raise InvalidTargetError(f"unseen target value(s): {bad}")
        else:
            y = np.zeros(table.n_rows, dtype=int)
        return Dataset(X, y, list(self.feature_names), list(self.class_names))

    def to_text(self) -> str:
        lines = ["encoder v1", f"target {self.target}"]
        for k, c in enumerate(self.class_names):
            lines.append(f"class {k} {c}")
        for spec in self.specs:
            if spec.kind == "categorical":
                lines.append(f"column categorical {len(spec.categories)} {spec.name}")
                for c in spec.categories:
                    lines.append(f" value {c}")
            else:
                lines.append(f"column numerical {spec.lo!r} {spec.hi!r} {spec.name}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "TableEncoder":
        enc = cls()
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0] != "encoder v1":
            raise ValueError("not an encoder block")
        class_names: dict[int, str] = {}
        i = 1
        while i < len(lines):
            line = lines[i]
            if line.startswith("target "):
                enc.target = line[len("target "):]
            elif line.startswith("class "):
                _, k, name = line.split(" ", 2)
                class_names[int(k)] = name
            elif line.startswith("column categorical "):
                _, _, count, name = line.split(" ", 3)
                cats = []
                for j in range(int(count)):
                    cats.append(lines[i + 1 + j][len(" value "):])
                i += int(count)
                enc.specs.append(_ColumnSpec(name, "categorical", categories=cats))
                enc.feature_names.extend(f"{name}={c}" for c in cats)
            elif line.startswith("column numerical "):
                _, _, lo, hi, name = line.split(" ", 4)
                enc.specs.append(_ColumnSpec(name, "numerical", lo=float(lo), hi=float(hi)))
                enc.feature_names.append(name)
            i += 1
        enc.class_names = [class_names[k] for k in sorted(class_names)]
        return enc


def encode(table: RawTable, overrides: dict[str, str] | None = None) -> tuple[Dataset, TableEncoder]:
    """Fit an encoder on a table and return (dataset, encoder)."""
    enc = TableEncoder().fit(table, overrides)
    return enc.transform(table), enc


def split(data: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Disjoint seeded train/test row partition."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    order = split_permutation(data.n_rows, seed)
    n_train = int(round(train_fraction * data.n_rows))
    return data.subset(order[:n_train]), data.subset(order[n_train:])


def split_permutation(n_rows: int, seed: int) -> np.ndarray:
    """The row permutation behind ``split`` (reused for raw-table splits)."""
    return np.random.default_rng(seed).permutation(n_rows)


def calibration_subset(train: Dataset, fraction: float, seed: int) -> Dataset:
    """Seeded row subset of the training data used for tuning."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must lie in (0, 1]")
    order = np.random.default_rng(seed + 1).permutation(train.n_rows)
    n_cal = int(round(fraction * train.n_rows))
    return train.subset(np.sort(order[:n_cal]))


def fingerprint(path: str) -> str:
    """Content hash of a data file, for run manifests."""
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()
