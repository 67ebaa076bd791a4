"""Text dataset formats, JSON model files and report writers.

Record-search lines::

    <label> qid:<qid> <fidx>:<val> ... # doc=<doc_id> rtype=<type>

Global-search (fusion) lines::

    <label> qid:<qid> score:<real> rtype:<type> doc:<doc_id>
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import tempfile
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence, Union

from .core import Dataset, Document, FusionModel, LinearModel, QueryGroup, RecordType, ValidationError, index_record_types

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
FUSION_FIELDS = ("score", "rtype", "doc")

Source = Union[str, os.PathLike, Iterable[str]]


class FormatError(ValidationError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _lines(source: Source) -> Iterator[str]:
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as fh:
            yield from fh
    else:
        yield from source


def _parse_label(token: str, lineno: int) -> int:
    try:
        label = int(token)
    except ValueError:
        raise FormatError(f"label {token!r} is not an integer", lineno) from None
    if label not in (0, 1):
        raise FormatError(f"label must be 0 or 1, got {label}", lineno)
    return label


def _parse_qid(token: str, lineno: int) -> str:
    if not token.startswith("qid:") or len(token) == 4:
        raise FormatError(f"expected qid:<id>, got {token!r}", lineno)
    return token[4:]


class _Grouper:
    """Collects consecutive lines into queries and rejects non-contiguous qids."""

    def __init__(self) -> None:
        self.finished: set[str] = set()
        self.current: str | None = None
        self.rows: list = []

    def push(self, qid: str, row, lineno: int) -> list | None:
        done = None
        if qid != self.current:
            if qid in self.finished:
                raise FormatError(f"qid {qid!r} is not contiguous", lineno)
            if self.current is not None:
                self.finished.add(self.current)
                done = (self.current, self.rows)
            self.current, self.rows = qid, []
        self.rows.append(row)
        return done

    def flush(self):
        if self.current is None:
            return None
        return self.current, self.rows


def _keep(query: QueryGroup) -> bool:
    if query.has_positive:
        return True
    log.warning("dropping query %r: no relevant documents", query.qid)
    return False


# --- record-search datasets ------------------------------------------------

def _parse_record_line(line: str, lineno: int, binary: bool):
    body, _, comment = line.partition("#")
    tokens = body.split()
    if len(tokens) < 2:
        raise FormatError("expected '<label> qid:<qid> ...'", lineno)
    label = _parse_label(tokens[0], lineno)
    qid = _parse_qid(tokens[1], lineno)
    features: dict[int, float] = {}
    last = -1
    for tok in tokens[2:]:
        idx, sep, val = tok.partition(":")
        try:
            i, v = int(idx), float(val)
        except ValueError:
            raise FormatError(f"malformed feature token {tok!r}", lineno) from None
        if not sep or i < 0 or not math.isfinite(v):
            raise FormatError(f"malformed feature token {tok!r}", lineno)
        if i <= last:
            raise FormatError("feature indices must be strictly ascending", lineno)
        if binary and v not in (0.0, 1.0):
            raise FormatError(f"non-binary feature value {val} at index {i}", lineno)
        last = i
        if v:
            features[i] = v
    meta = dict(item.split("=", 1) for item in comment.split() if "=" in item)
    return qid, (meta.get("doc"), meta.get("rtype"), features, label)


def parse_record_dataset(source: Source, binary: bool = True) -> Dataset:
    """Parse a record-search file; queries with no relevant document are dropped.

    Raises:
        FormatError: on a malformed line or, with ``binary``, a non-binary value.
    """
    raw: list[tuple[str, list]] = []
    grouper = _Grouper()
    lineno = 0
    for lineno, line in enumerate(_lines(source), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        qid, row = _parse_record_line(line, lineno, binary)
        done = grouper.push(qid, row, lineno)
        if done:
            raw.append(done)
    if grouper.flush():
        raw.append(grouper.flush())
    if not raw:
        log.warning("record dataset is empty")
        return Dataset(())

    types = index_record_types(r[1] for _, rows in raw for r in rows if r[1] is not None)
    queries = []
    for qid, rows in raw:
        docs = tuple(
            Document(doc or f"{qid}:{i}", types.get(rtype) if rtype else None, feats, label)
            for i, (doc, rtype, feats, label) in enumerate(rows)
        )
        query = QueryGroup(qid, docs)
        if _keep(query):
            queries.append(query)
    return Dataset(tuple(queries), tuple(types[n] for n in sorted(types)))


def format_record_line(qid: str, doc: Document) -> str:
    feats = " ".join(f"{i}:{_num(v)}" for i, v in sorted(doc.features.items()))
    parts = [str(doc.label), f"qid:{qid}"] + ([feats] if feats else [])
    comment = f"doc={doc.doc_id}" + (f" rtype={doc.record_type.name}" if doc.record_type else "")
    return " ".join(parts) + " # " + comment


def write_record_dataset(dataset: Iterable[QueryGroup], path) -> None:
    atomic_write_text(path, "".join(format_record_line(q.qid, d) + "\n" for q in dataset for d in q.documents))


# --- fusion datasets -------------------------------------------------------

def _parse_fusion_line(line: str, lineno: int):
    tokens = line.split()
    if len(tokens) < 2:
        raise FormatError("expected '<label> qid:<qid> score:<s> rtype:<t> doc:<d>'", lineno)
    label = _parse_label(tokens[0], lineno)
    qid = _parse_qid(tokens[1], lineno)
    fields: dict[str, str] = {}
    for tok in tokens[2:]:
        key, sep, val = tok.partition(":")
        if not sep or key not in FUSION_FIELDS:
            raise FormatError(f"unknown field token {tok!r}", lineno)
        if key in fields:
            raise FormatError(f"duplicate field {key!r}", lineno)
        fields[key] = val
    missing = [f for f in FUSION_FIELDS if f not in fields]
    if missing:
        raise FormatError(f"missing field(s): {', '.join(missing)}", lineno)
    try:
        score = float(fields["score"])
    except ValueError:
        raise FormatError(f"score {fields['score']!r} is not a number", lineno) from None
    if not math.isfinite(score):
        raise FormatError("score must be finite", lineno)
    return qid, (fields["doc"], fields["rtype"], score, label)


def _fusion_group(qid: str, rows, types: Mapping[str, RecordType]) -> QueryGroup:
    seen = set()
    docs, scores = [], {}
    for doc_id, rtype, score, label in rows:
        if doc_id in seen:
            raise FormatError(f"query {qid!r}: duplicate document {doc_id!r}")
        seen.add(doc_id)
        docs.append(Document(doc_id, types[rtype], {}, label))
        scores[doc_id] = score
    return QueryGroup(qid, tuple(docs), scores)


def iter_fusion_queries(source: Source) -> Iterator[QueryGroup]:
    """Stream query groups one at a time.

    Record types carry provisional indices in order of first sight;
    :func:`parse_fusion_dataset` re-indexes them lexicographically.
    """
    grouper = _Grouper()
    types: dict[str, RecordType] = {}
    for lineno, line in enumerate(_lines(source), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        qid, row = _parse_fusion_line(line, lineno)
        types.setdefault(row[1], RecordType(row[1], len(types)))
        done = grouper.push(qid, row, lineno)
        if done:
            yield _fusion_group(*done, types)
    tail = grouper.flush()
    if tail:
        yield _fusion_group(*tail, types)


def parse_fusion_dataset(source: Source) -> Dataset:
    queries = [q for q in iter_fusion_queries(source) if _keep(q)]
    if not queries:
        log.warning("fusion dataset is empty")
        return Dataset(())
    types = index_record_types(d.record_type.name for q in queries for d in q.documents)
    reindexed = tuple(
        replace(q, documents=tuple(replace(d, record_type=types[d.record_type.name]) for d in q.documents))
        for q in queries
    )
    return Dataset(reindexed, tuple(types[n] for n in sorted(types)))


def format_fusion_line(query: QueryGroup, doc: Document) -> str:
    return (
        f"{doc.label} qid:{query.qid} score:{_num(query.shard_scores[doc.doc_id])} "
        f"rtype:{doc.record_type.name} doc:{doc.doc_id}"
    )


def write_fusion_dataset(dataset: Iterable[QueryGroup], path) -> None:
    atomic_write_text(path, "".join(format_fusion_line(q, d) + "\n" for q in dataset for d in q.documents))


def _num(v: float) -> str:
    return str(int(v)) if float(v).is_integer() and abs(v) < 1e15 else repr(float(v))


# --- models ------------------------------------------------------------------

Model = Union[LinearModel, FusionModel]


def model_to_dict(model: Model) -> dict:
    if isinstance(model, LinearModel):
        kind, weights = "linear", list(model.weights)
    elif isinstance(model, FusionModel):
        kind, weights = "fusion", dict(model.weights)
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    return {"schema_version": SCHEMA_VERSION, "kind": kind, "weights": weights, "metadata": dict(model.metadata)}


def model_from_dict(data: Mapping) -> Model:
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ValidationError(f"unsupported model schema_version {data.get('schema_version')!r}")
    kind = data.get("kind")
    metadata = dict(data.get("metadata") or {})
    if kind == "linear":
        return LinearModel(tuple(float(w) for w in data["weights"]), metadata)
    if kind == "fusion":
        return FusionModel({str(k): float(w) for k, w in data["weights"].items()}, metadata)
    raise ValidationError(f"unknown model kind {kind!r}")


def dumps_model(model: Model) -> str:
    return json.dumps(model_to_dict(model), indent=2, sort_keys=True) + "\n"


def save_model(model: Model, path) -> None:
    atomic_write_text(path, dumps_model(model))


def load_model(path) -> Model:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: not a JSON model file ({exc})") from None
    return model_from_dict(data)


def load_config(path) -> dict:
    """Read a JSON settings file: flat keys, or ``{"ss": {...}, "ca": {...}}`` sections."""
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON config ({exc})") from None
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: config must be a JSON object")
    return data


# --- reports -----------------------------------------------------------------

@dataclass
class EvalReport:
    metrics: list[str]
    rows: list[dict]
    aggregate: dict[str, float]

    def to_json(self) -> str:
        return json.dumps(
            {"metrics": self.metrics, "aggregate": self.aggregate, "per_query": self.rows},
            indent=2,
        ) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["qid", "has_relevant", *self.metrics])
        for row in self.rows:
            writer.writerow([row["qid"], int(row["has_relevant"]), *(repr(row[m]) for m in self.metrics)])
        writer.writerow(["aggregate", "", *(repr(self.aggregate[m]) for m in self.metrics)])
        return buf.getvalue()

    def write(self, path) -> tuple[Path, Path]:
        path = Path(path)
        json_path = path.with_suffix(".json") if path.suffix == ".csv" else path
        csv_path = path.with_suffix(".csv")
        atomic_write_text(json_path, self.to_json())
        atomic_write_text(csv_path, self.to_csv())
        return json_path, csv_path


def write_csv_rows(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    atomic_write_text(path, buf.getvalue())


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
