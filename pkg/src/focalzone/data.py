"""Datasets: CSV ingestion, stratified splitting and synthetic generators.

A dataset is a dense ``(I, K)`` float matrix plus integer labels that have
been re-indexed to ``0..num_classes-1``. The original label values are kept
in ``label_values`` so predictions can be mapped back.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .exceptions import FormatError, ParseError, ValidationError


class Sample(NamedTuple):
    features: np.ndarray
    label: int


@dataclass(frozen=True)
class Dataset:
    """Immutable labelled sample matrix.

    Parameters
    ----------
    X : ndarray of shape (I, K)
    y : ndarray of shape (I,)
        Dense class indices in ``[0, num_classes)``.
    label_values : tuple of int, optional
        Original label for each class index. Defaults to ``0..num_classes-1``.
    """

    X: np.ndarray
    y: np.ndarray
    label_values: tuple = field(default=())

    def __post_init__(self):
        X = np.array(self.X, dtype=np.float64)
        y = np.array(self.y, dtype=np.int64)
        if X.ndim != 2:
            raise ValidationError(f"X must be 2-D, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise ValidationError(f"y has shape {y.shape}, expected ({X.shape[0]},)")
        if X.shape[0] == 0:
            raise ValidationError("dataset is empty")
        if y.min() < 0:
            raise ValidationError("labels must be non-negative")
        num_classes = int(y.max()) + 1
        if np.unique(y).size != num_classes:
            raise ValidationError("every class in [0, num_classes) must appear at least once")
        values = tuple(int(v) for v in self.label_values) or tuple(range(num_classes))
        if len(values) != num_classes:
            raise ValidationError(
                f"label_values has {len(values)} entries for {num_classes} classes"
            )
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "label_values", values)

    @property
    def I(self) -> int:  # noqa: E743
        return self.X.shape[0]

    @property
    def K(self) -> int:
        return self.X.shape[1]

    @property
    def num_classes(self) -> int:
        return len(self.label_values)

    def __len__(self):
        return self.I

    def __getitem__(self, i) -> Sample:
        return Sample(self.X[i], int(self.y[i]))

    def __iter__(self) -> Iterator[Sample]:
        for i in range(self.I):
            yield self[i]

    @property
    def samples(self) -> list[Sample]:
        return list(self)

    def subset(self, indices) -> "Dataset":
        """Rows at ``indices``, keeping the full label mapping."""
        idx = np.asarray(indices, dtype=np.int64)
        return _unchecked(self.X[idx], self.y[idx], self.label_values)


def _unchecked(X, y, label_values) -> Dataset:
    # subsets may legitimately miss a class; skip the coverage check
    ds = object.__new__(Dataset)
    X = np.array(X, dtype=np.float64)
    y = np.array(y, dtype=np.int64)
    X.flags.writeable = False
    y.flags.writeable = False
    object.__setattr__(ds, "X", X)
    object.__setattr__(ds, "y", y)
    object.__setattr__(ds, "label_values", tuple(label_values))
    return ds


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def read_rows(path) -> list[list[str]]:
    """Read a comma separated file, dropping blank lines and an optional header."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if rows and not all(_is_number(c) for c in rows[0]):
        rows = rows[1:]
    return rows


def parse_matrix(rows: Sequence[Sequence[str]], width: int | None = None, first_row: int = 1):
    """Parse string rows into a float matrix, checking that rows are not ragged."""
    if width is None:
        width = len(rows[0])
    out = np.empty((len(rows), width), dtype=np.float64)
    for i, row in enumerate(rows):
        if len(row) != width:
            raise FormatError(
                f"row {i + first_row}: expected {width} fields, found {len(row)}"
            )
        for j, cell in enumerate(row):
            try:
                out[i, j] = float(cell)
            except ValueError:
                raise ParseError(
                    f"row {i + first_row}, column {j + 1}: cannot parse {cell.strip()!r}"
                ) from None
    return out


def load_csv(path) -> Dataset:
    """Load ``K`` feature columns followed by one integer label column.

    Labels are re-indexed densely in sorted order of their original values.
    """
    rows = read_rows(path)
    if len(rows) < 2:
        raise FormatError(f"{path}: need at least 2 data rows, found {len(rows)}")
    if len(rows[0]) < 2:
        raise FormatError(f"{path}: need at least one feature column and a label")
    M = parse_matrix(rows)
    raw = M[:, -1]
    labels = raw.astype(np.int64)
    bad = np.flatnonzero(labels != raw)
    if bad.size:
        raise ParseError(f"row {bad[0] + 1}: label {raw[bad[0]]!r} is not an integer")
    values, y = np.unique(labels, return_inverse=True)
    if values.size < 2:
        raise ValidationError(f"{path}: only one class present")
    return Dataset(M[:, :-1], y, tuple(int(v) for v in values))


def format_csv(X, labels=None) -> str:
    """Render rows as CSV text; ``repr`` keeps float64 values round-trippable."""
    buf = io.StringIO()
    for i, row in enumerate(np.asarray(X, dtype=np.float64)):
        cells = [repr(float(v)) for v in row]
        if labels is not None:
            cells.append(str(int(labels[i])))
        buf.write(",".join(cells))
        buf.write("\n")
    return buf.getvalue()


def dataset_to_csv(ds: Dataset) -> str:
    original = np.asarray(ds.label_values, dtype=np.int64)[ds.y]
    return format_csv(ds.X, original)


def split(ds: Dataset, train_fraction: float = 0.9, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Stratified random split.

    The train side gets exactly ``round(I * f)`` samples; per-class quotas
    are apportioned by largest remainder so each class is split as close to
    ``f`` as rounding allows.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValidationError(f"train_fraction must be in (0, 1), got {train_fraction}")
    n_train = int(round(ds.I * train_fraction))
    if n_train == 0 or n_train == ds.I:
        raise ValidationError(
            f"train_fraction={train_fraction} with {ds.I} samples leaves one side empty"
        )
    rng = np.random.default_rng(seed)
    counts = np.bincount(ds.y, minlength=ds.num_classes)
    exact = counts * train_fraction
    quota = np.floor(exact).astype(np.int64)
    # largest remainder; ties go to the lower class index
    order = sorted(range(ds.num_classes), key=lambda c: (-(exact[c] - quota[c]), c))
    for c in order[: n_train - int(quota.sum())]:
        quota[c] += 1
    train_idx, test_idx = [], []
    for c in range(ds.num_classes):
        members = rng.permutation(np.flatnonzero(ds.y == c))
        train_idx.append(members[: quota[c]])
        test_idx.append(members[quota[c]:])
    train_idx = np.sort(np.concatenate(train_idx))
    test_idx = np.sort(np.concatenate(test_idx))
    return ds.subset(train_idx), ds.subset(test_idx)


def split_indices(ds: Dataset, train_fraction: float = 0.9, seed: int = 0):
    """Same partition as :func:`split`, returned as index arrays."""
    idx = _unchecked(np.arange(ds.I, dtype=np.float64)[:, None], ds.y, ds.label_values)
    tr, te = split(idx, train_fraction, seed)
    return tr.X[:, 0].astype(np.int64), te.X[:, 0].astype(np.int64)


@dataclass(frozen=True)
class SyntheticSpec:
    """Generator settings for data with a planted class-dependent AR band.

    Dimensions ``band[0]:band[1]`` of a class-``c`` sample follow
    ``x_j = sum_m coefs[c][m] * x_{j-m} + noise``; all other dimensions are
    i.i.d. standard normal.
    """

    K: int = 32
    num_classes: int = 3
    samples_per_class: int = 200
    band: tuple = (4, 28)
    ar_order: int = 1
    coefs: tuple = ((0.9,), (-0.9,), (0.0,))
    noise_std: float = 1.0
    start_values: tuple | None = None

    def validate(self):
        j0, j1 = self.band
        if self.K < 2 or self.num_classes < 2 or self.samples_per_class < 1:
            raise ValidationError("need K >= 2, num_classes >= 2, samples_per_class >= 1")
        if not 0 <= j0 < j1 <= self.K:
            raise ValidationError(f"band {self.band} must satisfy 0 <= j0 < j1 <= K={self.K}")
        if j1 - j0 < self.ar_order + 2:
            raise ValidationError(f"band width {j1 - j0} < ar_order + 2")
        if len(self.coefs) != self.num_classes:
            raise ValidationError(f"{len(self.coefs)} coefficient vectors for {self.num_classes} classes")
        vecs = [tuple(float(v) for v in c) for c in self.coefs]
        if any(len(v) != self.ar_order for v in vecs):
            raise ValidationError(f"every coefficient vector must have length {self.ar_order}")
        if len(set(vecs)) != len(vecs):
            raise ValidationError("per-class coefficient vectors must be pairwise distinct")
        for c, v in enumerate(vecs):
            rho = companion_radius(v)
            if not rho < 1.0:
                raise ValidationError(
                    f"class {c} coefficients {v} are not stationary (spectral radius {rho:.4f})"
                )
        if self.noise_std < 0:
            raise ValidationError("noise_std must be >= 0")
        if self.start_values is not None and len(self.start_values) != self.ar_order:
            raise ValidationError("start_values must have ar_order entries")

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticSpec":
        d = dict(d)
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValidationError(f"unknown synthetic spec keys: {sorted(unknown)}")
        if "band" in d:
            d["band"] = tuple(d["band"])
        if "coefs" in d:
            d["coefs"] = tuple(tuple(c) for c in d["coefs"])
        if d.get("start_values") is not None:
            d["start_values"] = tuple(d["start_values"])
        return cls(**d)

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "num_classes": self.num_classes,
            "samples_per_class": self.samples_per_class,
            "band": list(self.band),
            "ar_order": self.ar_order,
            "coefs": [list(c) for c in self.coefs],
            "noise_std": self.noise_std,
            "start_values": None if self.start_values is None else list(self.start_values),
        }


def companion_radius(coefs) -> float:
    """Spectral radius of the AR companion matrix."""
    p = len(coefs)
    C = np.zeros((p, p))
    C[0, :] = coefs
    if p > 1:
        C[1:, :-1] = np.eye(p - 1)
    return float(np.max(np.abs(np.linalg.eigvals(C))))


def generate_synthetic(spec: SyntheticSpec, seed: int = 0) -> Dataset:
    """Draw a dataset whose classes differ only in the AR structure of one band.

    The first ``ar_order`` band dimensions are standard normal draws (or
    ``spec.start_values`` when given); the recurrence runs from there.
    """
    spec.validate()
    rng = np.random.default_rng(seed)
    j0, j1 = spec.band
    p = spec.ar_order
    n = spec.samples_per_class
    blocks, labels = [], []
    for c in range(spec.num_classes):
        X = rng.standard_normal((n, spec.K))
        phi = np.asarray(spec.coefs[c], dtype=np.float64)
        eps = rng.standard_normal((n, j1 - j0)) * spec.noise_std
        if spec.start_values is not None:
            X[:, j0:j0 + p] = np.asarray(spec.start_values, dtype=np.float64)
        for j in range(j0 + p, j1):
            # lags ordered x_{j-1}, ..., x_{j-p}
            X[:, j] = X[:, j - p:j][:, ::-1] @ phi + eps[:, j - j0]
        blocks.append(X)
        labels.append(np.full(n, c))
    return Dataset(np.vstack(blocks), np.concatenate(labels))
