"""Reading and writing the on-disk formats used by the command line tools.

Three families of files:

* distribution spec: a JSON document with top-level keys ``classes``,
  ``groups``, ``q`` (map "i,a" -> probability) and ``subgroups``
  (map "i,a" -> {mean, std} for univariate cells or {mean_vec, cov} with a
  row-major covariance for multivariate ones);
* tabular CSVs: feature samples with header ``x_0,...,x_{d-1},class,group``,
  row labels with header ``row,label,group``, and generic metric tables;
* packed feature matrices: magic ``EFAF``, little-endian u32 row and column
  counts, then row-major 32-bit floats; a plain numeric CSV is accepted as a
  fallback on read.

Class and group tokens serialize as text; on read, tokens that parse as
integers come back as integers so round-trips preserve integer-labeled
specs. All writes go through a temp file plus atomic rename, so readers
never observe a half-written file.
"""

from __future__ import annotations

import json
import math
import os
import struct
import tempfile
from collections.abc import Iterable, Sequence
from typing import Any

import numpy as np

from .distributions import (
    FairDistribution,
    JointWeights,
    MultivariateSubgroupGaussian,
    SubgroupGaussian,
)
from .errors import ParseError

__all__ = [
    "atomic_write_text",
    "atomic_write_bytes",
    "write_csv",
    "dist_to_dict",
    "dist_from_dict",
    "save_spec",
    "load_spec",
    "read_samples_csv",
    "write_samples_csv",
    "read_matrix",
    "write_matrix",
    "read_labels_csv",
    "write_labels_csv",
]

_MATRIX_MAGIC = b"EFAF"


# ---------------------------------------------------------------------------
# Atomic file primitives
# ---------------------------------------------------------------------------


def atomic_write_bytes(path: str, data: bytes) -> None:
    """Write a file so that readers see either the old content or all of the new."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp_specfile_")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def atomic_write_text(path: str, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def write_csv(path: str, header: str, rows: Iterable[str]) -> None:
    """Write a CSV file from already-formatted comma-joined lines."""
    lines = [header]
    lines.extend(rows)
    atomic_write_text(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Distribution spec documents
# ---------------------------------------------------------------------------


def _token_to_text(token: Any) -> str:
    text = str(token)
    if "," in text:
        raise ParseError(f"class/group token {token!r} must not contain a comma")
    return text


def _text_to_token(text: str) -> Any:
    try:
        return int(text)
    except ValueError:
        return text


def _parse_cell_key(key: str) -> tuple[Any, Any]:
    parts = key.split(",")
    if len(parts) != 2:
        raise ParseError(f'cell key {key!r} must have the form "class,group"')
    return _text_to_token(parts[0]), _text_to_token(parts[1])


def dist_to_dict(dist: FairDistribution) -> dict[str, Any]:
    """The JSON-ready document form of a distribution."""
    subgroups: dict[str, Any] = {}
    for (i, a), g in dist.subgroups.items():
        key = f"{_token_to_text(i)},{_token_to_text(a)}"
        if isinstance(g, SubgroupGaussian):
            subgroups[key] = {"mean": g.mean, "std": g.std}
        else:
            subgroups[key] = {
                "mean_vec": g.mean_vec.tolist(),
                "cov": g.cov.tolist(),
            }
    return {
        "classes": [_token_to_text(i) for i in dist.classes],
        "groups": [_token_to_text(a) for a in dist.groups],
        "q": {
            f"{_token_to_text(i)},{_token_to_text(a)}": value
            for (i, a), value in dist.weights.q.items()
        },
        "subgroups": subgroups,
    }


def _require_number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"{where} must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ParseError(f"{where} must be finite, got {value!r}")
    return value


def _parse_subgroup(entry: Any, where: str):
    if not isinstance(entry, dict):
        raise ParseError(f"{where} must be an object")
    if "mean" in entry and "std" in entry:
        return SubgroupGaussian(
            _require_number(entry["mean"], f"{where}.mean"),
            _require_number(entry["std"], f"{where}.std"),
        )
    if "mean_vec" in entry and "cov" in entry:
        try:
            mean = np.asarray(entry["mean_vec"], dtype=float)
            cov = np.asarray(entry["cov"], dtype=float)
        except (TypeError, ValueError) as exc:
            raise ParseError(f"{where}: mean_vec/cov are not numeric arrays") from exc
        if mean.ndim != 1 or cov.ndim != 2:
            raise ParseError(f"{where}: mean_vec must be a vector and cov a matrix")
        return MultivariateSubgroupGaussian(mean, cov)
    raise ParseError(f"{where} must have fields (mean, std) or (mean_vec, cov)")


def dist_from_dict(obj: Any) -> FairDistribution:
    """Parse the document form back into a distribution.

    Structural problems (missing keys, wrong shapes, unparseable numbers)
    raise ParseError; semantically invalid values (negative stds, weights not
    summing to one) surface as the validation errors of the domain types.
    """
    if not isinstance(obj, dict):
        raise ParseError("spec document must be a JSON object")
    for field in ("classes", "groups", "q", "subgroups"):
        if field not in obj:
            raise ParseError(f"spec document is missing the {field!r} field")
    if not isinstance(obj["classes"], list) or not isinstance(obj["groups"], list):
        raise ParseError("'classes' and 'groups' must be arrays")
    classes = tuple(_text_to_token(_token_to_text(i)) for i in obj["classes"])
    groups = tuple(_text_to_token(_token_to_text(a)) for a in obj["groups"])
    if not isinstance(obj["q"], dict) or not isinstance(obj["subgroups"], dict):
        raise ParseError("'q' and 'subgroups' must be objects keyed by \"class,group\"")
    q = {
        _parse_cell_key(key): _require_number(value, f"q[{key!r}]")
        for key, value in obj["q"].items()
    }
    subgroups = {
        _parse_cell_key(key): _parse_subgroup(entry, f"subgroups[{key!r}]")
        for key, entry in obj["subgroups"].items()
    }
    return FairDistribution(JointWeights(q), subgroups, classes, groups)


def save_spec(dist: FairDistribution, path: str) -> None:
    atomic_write_text(path, json.dumps(dist_to_dict(dist), indent=2) + "\n")


def load_spec(path: str) -> FairDistribution:
    with open(path, "r", encoding="utf-8") as handle:
        text = handle.read()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not valid JSON ({exc})") from exc
    return dist_from_dict(obj)


# ---------------------------------------------------------------------------
# Sample CSVs
# ---------------------------------------------------------------------------


def read_samples_csv(path: str) -> list[tuple[np.ndarray, Any, Any]]:
    """Read feature samples with header x_0,...,x_{d-1},class,group."""
    with open(path, "r", encoding="utf-8") as handle:
        lines = [line.strip() for line in handle if line.strip()]
    if not lines:
        raise ParseError(f"{path}: empty samples file")
    header = lines[0].split(",")
    if len(header) < 3 or header[-2:] != ["class", "group"]:
        raise ParseError(f"{path}: header must end with 'class,group'")
    d = len(header) - 2
    expected = [f"x_{k}" for k in range(d)]
    if header[:d] != expected:
        raise ParseError(f"{path}: feature columns must be named x_0..x_{d - 1} in order")
    rows: list[tuple[np.ndarray, Any, Any]] = []
    for number, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != d + 2:
            raise ParseError(f"{path}:{number}: expected {d + 2} columns, got {len(cells)}")
        try:
            vec = np.array([float(cell) for cell in cells[:d]])
        except ValueError as exc:
            raise ParseError(f"{path}:{number}: non-numeric feature value") from exc
        rows.append((vec, _text_to_token(cells[d]), _text_to_token(cells[d + 1])))
    return rows


def write_samples_csv(path: str, rows: Sequence[tuple[np.ndarray, Any, Any]]) -> None:
    if not rows:
        raise ParseError("refusing to write an empty samples file")
    d = np.atleast_1d(np.asarray(rows[0][0])).shape[0]
    header = ",".join([f"x_{k}" for k in range(d)] + ["class", "group"])
    body = (
        ",".join([repr(float(v)) for v in np.atleast_1d(np.asarray(x))]
                 + [_token_to_text(i), _token_to_text(a)])
        for x, i, a in rows
    )
    write_csv(path, header, body)


# ---------------------------------------------------------------------------
# Packed feature matrices and label files
# ---------------------------------------------------------------------------


def write_matrix(path: str, features: np.ndarray) -> None:
    """Write a packed row-major float32 matrix with an EFAF header."""
    arr = np.ascontiguousarray(np.asarray(features, dtype=np.float32))
    if arr.ndim != 2:
        raise ParseError(f"feature matrix must be 2-d, got shape {arr.shape}")
    n, d = arr.shape
    atomic_write_bytes(path, _MATRIX_MAGIC + struct.pack("<II", n, d) + arr.tobytes(order="C"))


def read_matrix(path: str) -> np.ndarray:
    """Read a packed EFAF matrix, falling back to plain numeric CSV."""
    with open(path, "rb") as handle:
        blob = handle.read()
    if blob[:4] == _MATRIX_MAGIC:
        if len(blob) < 12:
            raise ParseError(f"{path}: truncated matrix header")
        n, d = struct.unpack("<II", blob[4:12])
        expected = 12 + 4 * n * d
        if len(blob) != expected:
            raise ParseError(
                f"{path}: matrix payload is {len(blob) - 12} bytes, expected {expected - 12}"
            )
        return (
            np.frombuffer(blob, dtype="<f4", offset=12).reshape(n, d).astype(float)
        )
    try:
        text = blob.decode("utf-8")
        rows = [
            [float(cell) for cell in line.split(",")]
            for line in text.splitlines()
            if line.strip()
        ]
        widths = {len(r) for r in rows}
        if not rows or len(widths) != 1:
            raise ValueError("empty or ragged")
        return np.asarray(rows, dtype=float)
    except (UnicodeDecodeError, ValueError) as exc:
        raise ParseError(f"{path}: neither a packed matrix nor a numeric CSV") from exc


def read_labels_csv(path: str, n_rows: int) -> tuple[np.ndarray, np.ndarray]:
    """Read the companion label file row,label,group covering rows 0..n_rows-1."""
    with open(path, "r", encoding="utf-8") as handle:
        lines = [line.strip() for line in handle if line.strip()]
    if not lines or lines[0].split(",") != ["row", "label", "group"]:
        raise ParseError(f"{path}: header must be 'row,label,group'")
    labels: list[Any] = [None] * n_rows
    groups: list[Any] = [None] * n_rows
    seen = np.zeros(n_rows, dtype=bool)
    for number, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != 3:
            raise ParseError(f"{path}:{number}: expected 3 columns, got {len(cells)}")
        try:
            row = int(cells[0])
        except ValueError as exc:
            raise ParseError(f"{path}:{number}: row index {cells[0]!r} is not an integer") from exc
        if not (0 <= row < n_rows):
            raise ParseError(f"{path}:{number}: row index {row} outside 0..{n_rows - 1}")
        if seen[row]:
            raise ParseError(f"{path}:{number}: duplicate entry for row {row}")
        seen[row] = True
        labels[row] = _text_to_token(cells[1])
        groups[row] = _text_to_token(cells[2])
    if not seen.all():
        missing = int(np.argmin(seen))
        raise ParseError(f"{path}: no label entry for row {missing}")
    return np.asarray(labels), np.asarray(groups)


def write_labels_csv(path: str, labels: Sequence[Any], groups: Sequence[Any]) -> None:
    if len(labels) != len(groups):
        raise ParseError("labels and groups must have equal length")
    body = (
        f"{row},{_token_to_text(label)},{_token_to_text(group)}"
        for row, (label, group) in enumerate(zip(labels, groups))
    )
    write_csv(path, "row,label,group", body)
