"""Dataset ingestion and stream slicing.

Supported inputs:

* Mulan-style datasets: an ARFF file (dense or sparse ``{idx value, ...}``
  rows) plus an XML header naming the label attributes.
* A sparse TSV format, one instance per line:
  ``row_id <TAB> idx:val,idx:val,... <TAB> labelbits``.
* A seeded synthetic multi-label generator.

Features are held in a CSR matrix (missing values as explicit NaN), labels
as a dense ``uint8`` matrix.
"""
from __future__ import annotations

import math
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np
import scipy.sparse as sp


class ArffError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class Attribute:
    name: str
    kind: str  # "numeric" or "nominal"
    values: tuple[str, ...] = ()

    @property
    def nominal(self) -> bool:
        return self.kind == "nominal"


@dataclass
class ArffSchema:
    relation: str
    attributes: list[Attribute]

    def index(self, name: str) -> int:
        for i, a in enumerate(self.attributes):
            if a.name == name:
                return i
        raise KeyError(name)


# ---------------------------------------------------------------- tokenizing

def _split_quoted(text: str, sep: str) -> list[str]:
    """Split on ``sep`` outside single/double quotes; tokens are stripped."""
    out, buf, quote, escaped = [], [], None, False
    for ch in text:
        if escaped:
            buf.append(ch)
            escaped = False
        elif ch == "\\":
            buf.append(ch)
            escaped = True
        elif quote:
            buf.append(ch)
            if ch == quote:
                quote = None
        elif ch in "'\"":
            buf.append(ch)
            quote = ch
        elif ch == sep:
            out.append("".join(buf).strip())
            buf = []
        else:
            buf.append(ch)
    out.append("".join(buf).strip())
    return out


def _unquote(token: str) -> str:
    token = token.strip()
    if len(token) >= 2 and token[0] == token[-1] and token[0] in "'\"":
        return re.sub(r"\\(.)", r"\1", token[1:-1])
    return token


def _quote(name: str) -> str:
    if re.fullmatch(r"[A-Za-z0-9_.\-]+", name) and name not in ("?",):
        return name
    return "'" + name.replace("\\", "\\\\").replace("'", "\\'") + "'"


def _read_name(rest: str, lineno: int) -> tuple[str, str]:
    """Pull a (possibly quoted) name off the front of ``rest``."""
    rest = rest.strip()
    if not rest:
        raise ArffError("missing name", lineno)
    if rest[0] in "'\"":
        q = rest[0]
        i = 1
        while i < len(rest):
            if rest[i] == "\\":
                i += 2
                continue
            if rest[i] == q:
                return _unquote(rest[: i + 1]), rest[i + 1 :].strip()
            i += 1
        raise ArffError("unterminated quoted name", lineno)
    parts = rest.split(None, 1)
    return parts[0], parts[1].strip() if len(parts) > 1 else ""


# ------------------------------------------------------------------- ARFF

_NUMERIC_TYPES = {"numeric", "real", "integer"}


def _parse_attribute(rest: str, lineno: int) -> Attribute:
    name, type_spec = _read_name(rest, lineno)
    if type_spec.startswith("{"):
        if not type_spec.endswith("}"):
            raise ArffError(f"unterminated nominal specification for {name!r}", lineno)
        values = tuple(_unquote(v) for v in _split_quoted(type_spec[1:-1], ","))
        return Attribute(name, "nominal", values)
    if type_spec.lower() in _NUMERIC_TYPES:
        return Attribute(name, "numeric")
    raise ArffError(f"unknown attribute type {type_spec!r} for {name!r}", lineno)


def _convert(attr: Attribute, token: str, lineno: int) -> float:
    token = token.strip()
    if token == "?":
        return math.nan
    if attr.nominal:
        value = _unquote(token)
        try:
            return float(attr.values.index(value))
        except ValueError:
            raise ArffError(f"value {value!r} not declared for nominal {attr.name!r}", lineno)
    try:
        v = float(_unquote(token))
    except ValueError:
        raise ArffError(f"non-numeric value {token!r} for numeric {attr.name!r}", lineno)
    if not math.isfinite(v):
        raise ArffError(f"non-finite value {token!r} for {attr.name!r}", lineno)
    return v


def _parse_row(line: str, attrs: list[Attribute], lineno: int) -> dict[int, float]:
    m = len(attrs)
    row: dict[int, float] = {}
    if line.startswith("{"):
        body = line[1 : line.index("}")] if "}" in line else None
        if body is None:
            raise ArffError("unterminated sparse row", lineno)
        for item in _split_quoted(body, ","):
            if not item:
                continue
            parts = item.split(None, 1)
            if len(parts) != 2:
                raise ArffError(f"malformed sparse entry {item!r}", lineno)
            try:
                idx = int(parts[0])
            except ValueError:
                raise ArffError(f"bad sparse index {parts[0]!r}", lineno)
            if not 0 <= idx < m:
                raise ArffError(f"attribute index {idx} out of range (0..{m - 1})", lineno)
            v = _convert(attrs[idx], parts[1], lineno)
            if v != 0.0:
                row[idx] = v
        return row
    tokens = _split_quoted(line, ",")
    if len(tokens) != m:
        raise ArffError(f"expected {m} values, got {len(tokens)}", lineno)
    for idx, (attr, tok) in enumerate(zip(attrs, tokens)):
        v = _convert(attr, tok, lineno)
        if v != 0.0:
            row[idx] = v
    return row


def parse_arff(text: str) -> tuple[ArffSchema, list[dict[int, float]]]:
    """Parse ARFF text into a schema and sparse rows.

    Each row maps attribute index to value; absent indices are zero, nominal
    values are stored as their declaration index and ``?`` as NaN.
    """
    relation = ""
    attrs: list[Attribute] = []
    rows: list[dict[int, float]] = []
    in_data = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        if in_data:
            rows.append(_parse_row(line, attrs, lineno))
            continue
        low = line.lower()
        if low.startswith("@relation"):
            relation = _unquote(line[len("@relation") :].strip())
        elif low.startswith("@attribute"):
            attrs.append(_parse_attribute(line[len("@attribute") :], lineno))
        elif low.startswith("@data"):
            in_data = True
        else:
            raise ArffError(f"unexpected header line {line!r}", lineno)
    if not in_data:
        raise ArffError("no @data section")
    return ArffSchema(relation, attrs), rows


def _format_value(attr: Attribute, v: float) -> str:
    if math.isnan(v):
        return "?"
    if attr.nominal:
        return _quote(attr.values[int(v)])
    return repr(float(v)) if v != int(v) else str(int(v))


def emit_arff(schema: ArffSchema, rows: list[dict[int, float]], sparse: bool = True) -> str:
    lines = [f"@relation {_quote(schema.relation or 'data')}", ""]
    for a in schema.attributes:
        if a.nominal:
            spec = "{" + ",".join(_quote(v) for v in a.values) + "}"
        else:
            spec = "numeric"
        lines.append(f"@attribute {_quote(a.name)} {spec}")
    lines += ["", "@data"]
    for row in rows:
        if sparse:
            items = ", ".join(
                f"{i} {_format_value(schema.attributes[i], v)}" for i, v in sorted(row.items())
            )
            lines.append("{" + items + "}")
        else:
            lines.append(
                ",".join(
                    _format_value(a, row.get(i, 0.0)) for i, a in enumerate(schema.attributes)
                )
            )
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------- label XML

def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def parse_label_xml(text: str) -> list[str]:
    """Label names in document order; nested label groups are flattened."""
    root = ET.fromstring(text)
    names: list[str] = []
    for el in root.iter():
        if _local(el.tag) == "label":
            name = el.get("name")
            if name is None:
                raise ValueError("label element without a name attribute")
            if name in names:
                raise ValueError(f"duplicate label {name!r}")
            names.append(name)
    return names


def emit_label_xml(names: list[str]) -> str:
    root = ET.Element("labels", xmlns="http://mulan.sourceforge.net/labels")
    for n in names:
        ET.SubElement(root, "label", name=n)
    return '<?xml version="1.0" encoding="utf-8"?>\n' + ET.tostring(root, encoding="unicode") + "\n"


# ----------------------------------------------------------------- dataset

@dataclass
class Dataset:
    name: str
    features: list[Attribute]
    X: sp.csr_matrix
    L: np.ndarray
    label_names: list[str]

    def __post_init__(self):
        self.X = sp.csr_matrix(self.X, dtype=np.float64)
        self.L = np.asarray(self.L, dtype=np.uint8)
        if self.L.ndim != 2 or self.L.shape[0] != self.X.shape[0]:
            raise ValueError("X and L disagree on the number of instances")
        if self.L.shape[1] != len(self.label_names):
            raise ValueError("label matrix width differs from the number of label names")
        if len(set(self.label_names)) != len(self.label_names):
            raise ValueError("label names must be unique")
        if len(self.features) != self.X.shape[1]:
            raise ValueError("feature schema width differs from X")
        if np.any(self.L > 1):
            raise ValueError("labels must be binary")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def m(self) -> int:
        return self.X.shape[1]

    @property
    def l(self) -> int:
        return self.L.shape[1]

    @property
    def density(self) -> float:
        return float(self.L.mean()) if self.L.size else 0.0

    @property
    def cardinality(self) -> float:
        return float(self.L.sum(axis=1).mean()) if self.n else 0.0

    def nominal_features(self) -> dict[int, int]:
        return {i: len(a.values) for i, a in enumerate(self.features) if a.nominal}

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        if (self.name, self.features, self.label_names) != (
            other.name, other.features, other.label_names
        ):
            return False
        if self.X.shape != other.X.shape or not np.array_equal(self.L, other.L):
            return False
        a, b = self.X.toarray(), other.X.toarray()
        return bool(np.array_equal(a, b, equal_nan=True))


def dataset_from_arff(schema: ArffSchema, rows, label_names: list[str]) -> Dataset:
    """Split the label attributes named in ``label_names`` out of parsed ARFF."""
    positions = []
    for name in label_names:
        try:
            positions.append(schema.index(name))
        except KeyError:
            raise ValueError(f"label {name!r} is not an attribute of the ARFF file") from None
    label_set = set(positions)
    feat_idx = [i for i in range(len(schema.attributes)) if i not in label_set]
    feat_pos = {a: j for j, a in enumerate(feat_idx)}

    L = np.zeros((len(rows), len(label_names)), dtype=np.uint8)
    onehot = {}
    for j, pos in enumerate(positions):
        attr = schema.attributes[pos]
        if attr.nominal:
            onehot[pos] = [_label_bit(attr, v) for v in range(len(attr.values))]

    data, indices, indptr = [], [], [0]
    for r, row in enumerate(rows):
        for j, pos in enumerate(positions):
            v = row.get(pos, 0.0)
            if pos in onehot:
                bit = onehot[pos][int(v)] if not math.isnan(v) else None
            else:
                bit = int(v) if v in (0.0, 1.0) else None
            if bit is None:
                raise ValueError(
                    f"instance {r}: label {label_names[j]!r} has non-binary value {v!r}"
                )
            L[r, j] = bit
        for i, v in sorted(row.items()):
            if i in feat_pos:
                indices.append(feat_pos[i])
                data.append(v)
        indptr.append(len(indices))
    X = sp.csr_matrix(
        (np.asarray(data, dtype=np.float64), np.asarray(indices, dtype=np.intp), indptr),
        shape=(len(rows), len(feat_idx)),
    )
    features = [schema.attributes[i] for i in feat_idx]
    return Dataset(schema.relation, features, X, L, list(label_names))


def _label_bit(attr: Attribute, index: int) -> int | None:
    value = attr.values[index]
    return {"0": 0, "1": 1}.get(value)


def load_dataset(arff_path, xml_path) -> Dataset:
    schema, rows = parse_arff(Path(arff_path).read_text())
    labels = parse_label_xml(Path(xml_path).read_text())
    return dataset_from_arff(schema, rows, labels)


def dataset_to_arff(ds: Dataset, sparse: bool = True) -> tuple[str, str]:
    """ARFF and label-XML texts for ``ds`` (labels appended after the features)."""
    label_attrs = [Attribute(n, "nominal", ("0", "1")) for n in ds.label_names]
    schema = ArffSchema(ds.name, list(ds.features) + label_attrs)
    rows = []
    for r in range(ds.n):
        start, end = ds.X.indptr[r], ds.X.indptr[r + 1]
        row = {int(i): float(v) for i, v in zip(ds.X.indices[start:end], ds.X.data[start:end]) if v != 0}
        for j in np.flatnonzero(ds.L[r]):
            row[ds.m + int(j)] = 1.0
        rows.append(row)
    return emit_arff(schema, rows, sparse), emit_label_xml(ds.label_names)


def save_dataset(ds: Dataset, arff_path, xml_path, sparse: bool = True) -> None:
    arff, xml = dataset_to_arff(ds, sparse)
    Path(arff_path).write_text(arff)
    Path(xml_path).write_text(xml)


# -------------------------------------------------------------- sparse TSV

def parse_tsv(text: str, n_features: int | None = None, name: str = "tsv") -> Dataset:
    """Read ``row_id <TAB> idx:val,... <TAB> labelbits`` lines."""
    data, indices, indptr, bits = [], [], [0], []
    width = None
    max_idx = -1
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip() or raw.startswith("#"):
            continue
        parts = raw.rstrip("\n").split("\t")
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected 3 tab-separated fields")
        row = []
        for item in filter(None, parts[1].split(",")):
            try:
                idx_s, val_s = item.split(":")
                idx = int(idx_s)
                val = math.nan if val_s.strip() == "?" else float(val_s)
            except ValueError:
                raise ValueError(f"line {lineno}: malformed feature {item!r}") from None
            if idx < 0 or (n_features is not None and idx >= n_features):
                raise ValueError(f"line {lineno}: feature index {idx} out of range")
            row.append((idx, val))
            max_idx = max(max_idx, idx)
        row.sort()
        indices += [i for i, _ in row]
        data += [v for _, v in row]
        indptr.append(len(indices))
        b = parts[2].strip()
        if not set(b) <= {"0", "1"}:
            raise ValueError(f"line {lineno}: label bits must be 0/1")
        if width is None:
            width = len(b)
        elif len(b) != width:
            raise ValueError(f"line {lineno}: expected {width} label bits, got {len(b)}")
        bits.append([int(c) for c in b])
    m = n_features if n_features is not None else max_idx + 1
    n = len(bits)
    X = sp.csr_matrix((np.asarray(data, dtype=np.float64), np.asarray(indices, dtype=np.intp), indptr), shape=(n, m))
    L = np.asarray(bits, dtype=np.uint8).reshape(n, width or 0)
    features = [Attribute(f"f{i}", "numeric") for i in range(m)]
    return Dataset(name, features, X, L, [f"y{j}" for j in range(L.shape[1])])


def emit_tsv(ds: Dataset) -> str:
    lines = []
    for r in range(ds.n):
        start, end = ds.X.indptr[r], ds.X.indptr[r + 1]
        feats = ",".join(
            f"{i}:{'?' if math.isnan(v) else repr(float(v))}"
            for i, v in zip(ds.X.indices[start:end], ds.X.data[start:end])
        )
        lines.append(f"{r}\t{feats}\t{''.join(str(int(b)) for b in ds.L[r])}")
    return "\n".join(lines) + ("\n" if lines else "")


# --------------------------------------------------------------- synthetic

def synth_stream(
    seed,
    n_instances: int,
    m: int,
    l: int,
    density: float,
    dependency_strength: float = 0.0,
    noise: float = 1.0,
) -> Dataset:
    """Seeded synthetic multi-label data.

    Each label score mixes a private latent factor with a factor shared by
    its label pair (labels ``2p`` and ``2p+1``); ``dependency_strength`` is
    the squared loading on the shared factor, so 0 gives independent labels
    and 1 gives identical pairs. Scores are thresholded at their empirical
    quantile so the realized density matches the request. Features are the
    sum of the Gaussian prototypes of the active labels plus isotropic noise.
    """
    if not 0.0 < density < 1.0:
        raise ValueError("density must lie in (0, 1)")
    if not 0.0 <= dependency_strength <= 1.0:
        raise ValueError("dependency_strength must lie in [0, 1]")
    if n_instances < 1 or m < 1 or l < 1:
        raise ValueError("n_instances, m and l must be positive")
    rng = np.random.default_rng(seed)
    private = rng.standard_normal((n_instances, l))
    shared = rng.standard_normal((n_instances, (l + 1) // 2))
    pair = np.arange(l) // 2
    scores = (
        math.sqrt(1.0 - dependency_strength) * private
        + math.sqrt(dependency_strength) * shared[:, pair]
    )
    cutoff = np.quantile(scores, 1.0 - density, method="higher")
    L = (scores >= cutoff).astype(np.uint8)
    prototypes = rng.standard_normal((l, m))
    X = L @ prototypes + noise * rng.standard_normal((n_instances, m))
    features = [Attribute(f"f{i}", "numeric") for i in range(m)]
    name = f"synth-m{m}-l{l}-n{n_instances}-d{density:g}-dep{dependency_strength:g}-s{seed}"
    return Dataset(name, features, sp.csr_matrix(X), L, [f"y{j}" for j in range(l)])


# ----------------------------------------------------------------- streams

@dataclass
class StreamConfig:
    window: int
    max_batches: int | None = None
    shuffle_seed: int | None = None

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("window must be at least 1")


@dataclass
class StreamBatch:
    index: int
    X: np.ndarray
    L: np.ndarray
    rows: np.ndarray = field(repr=False)


def batch_iter(ds: Dataset, config: StreamConfig | int) -> Iterator[StreamBatch]:
    """Consecutive windows of ``ds`` in stored (or seeded-shuffled) order."""
    if isinstance(config, int):
        config = StreamConfig(config)
    order = np.arange(ds.n)
    if config.shuffle_seed is not None:
        order = np.random.default_rng(config.shuffle_seed).permutation(ds.n)
    for b, start in enumerate(range(0, ds.n, config.window)):
        if config.max_batches is not None and b >= config.max_batches:
            return
        rows = order[start : start + config.window]
        yield StreamBatch(b, ds.X[rows].toarray(), ds.L[rows].astype(np.float64), rows)
