"""Scorers, checkpoint storage and averaging, and probability ensembling.

Neural forward passes are out of scope. Two deterministic scorers realize
the next-token interface instead: TableScorer (explicit conditional
distributions, enumerable by brute force) and NGramScorer (interpolated
count model over a monolingual corpus). Everything a decoder consumes goes
through Scorer.next_dist so beam search, sampling, and re-ranking never
know which kind of model is behind them.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyCheckpointListError,
    EmptyCorpusError,
    EmptyEnsembleError,
    ModelFormatError,
    NameSetMismatchError,
    ShapeMismatchError,
    VocabMismatchError,
)

_NORM_TOL = 1e-6


# ---------------------------------------------------------------------------
# checkpoints

@dataclass
class Checkpoint:
    """Named f32 tensors plus free-form metadata (step, validation score)."""

    tensors: dict[str, np.ndarray]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for name, arr in self.tensors.items():
            arr = np.asarray(arr, dtype=np.float32)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"tensor {name!r} contains non-finite values")
            clean[name] = arr
        self.tensors = clean


def checkpoint_average(checkpoints: list[Checkpoint]) -> Checkpoint:
    """Elementwise mean of k checkpoints sharing names and shapes.

    Values are summed in f64 after sorting the k values per element, so the
    result is bit-identical under any permutation of the input list.
    """
    if not checkpoints:
        raise EmptyCheckpointListError("checkpoint_average needs at least one checkpoint")
    names = _check_compatible(
        [{n: a.shape for n, a in c.tensors.items()} for c in checkpoints]
    )
    k = len(checkpoints)
    out = {}
    for name in names:
        stack = np.stack([c.tensors[name].astype(np.float64) for c in checkpoints])
        stack.sort(axis=0)
        out[name] = (stack.sum(axis=0) / k).astype(np.float32)
    return Checkpoint(tensors=out, metadata={"source_count": k})


def _check_compatible(shape_maps: list[dict]) -> list[str]:
    """Validate identical name sets and shapes; return sorted names."""
    first = shape_maps[0]
    for other in shape_maps[1:]:
        if set(other) != set(first):
            missing = set(first) ^ set(other)
            raise NameSetMismatchError(f"tensor name sets differ (symmetric diff: {sorted(missing)})")
        for name, shape in other.items():
            if tuple(shape) != tuple(first[name]):
                raise ShapeMismatchError(name, f"{tuple(first[name])} vs {tuple(shape)}")
    return sorted(first)


_MAGIC = b"NMTC"
_VERSION = 1


def _checkpoint_header(ckpt: Checkpoint) -> tuple[bytes, list[str]]:
    names = sorted(ckpt.tensors)
    entries = []
    offset = 0
    for name in names:
        arr = ckpt.tensors[name]
        entries.append(
            {"name": name, "shape": list(arr.shape), "dtype": "f32", "offset": offset}
        )
        offset += arr.size * 4
    header = {"metadata": ckpt.metadata, "tensors": entries}
    return json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8"), names


def save_checkpoint(ckpt: Checkpoint, path) -> None:
    """Binary container: magic NMTC, u32 version, u64 header length, JSON
    header, then raw little-endian f32 payloads in header order."""
    header_bytes, names = _checkpoint_header(ckpt)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", _VERSION))
        fh.write(struct.pack("<Q", len(header_bytes)))
        fh.write(header_bytes)
        for name in names:
            fh.write(ckpt.tensors[name].astype("<f4").tobytes())


def _read_header(fh, path):
    magic = fh.read(4)
    if magic != _MAGIC:
        raise ModelFormatError(f"{path}: bad magic {magic!r}")
    (version,) = struct.unpack("<I", fh.read(4))
    if version != _VERSION:
        raise ModelFormatError(f"{path}: unsupported version {version}")
    (hlen,) = struct.unpack("<Q", fh.read(8))
    header = json.loads(fh.read(hlen).decode("utf-8"))
    payload_start = 4 + 4 + 8 + hlen
    return header, payload_start


def checkpoint_metadata(path) -> dict:
    """Read just the metadata block, leaving payloads untouched."""
    with open(path, "rb") as fh:
        header, _ = _read_header(fh, path)
    return header.get("metadata", {})


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as fh:
        header, payload_start = _read_header(fh, path)
        tensors = {}
        for entry in header["tensors"]:
            if entry["dtype"] != "f32":
                raise ModelFormatError(f"{path}: unsupported dtype {entry['dtype']}")
            shape = tuple(entry["shape"])
            count = int(np.prod(shape, dtype=np.int64)) if shape else 1
            fh.seek(payload_start + entry["offset"])
            raw = fh.read(count * 4)
            if len(raw) != count * 4:
                raise ModelFormatError(f"{path}: truncated payload for {entry['name']!r}")
            tensors[entry["name"]] = np.frombuffer(raw, dtype="<f4").reshape(shape).copy()
    return Checkpoint(tensors=tensors, metadata=header.get("metadata", {}))


def average_checkpoint_files(paths: list, out_path) -> None:
    """Average checkpoint files tensor by tensor.

    Only k copies of one tensor are resident at a time, so memory is bounded
    by the largest tensor rather than the full checkpoint size.
    """
    if not paths:
        raise EmptyCheckpointListError("no checkpoint files given")
    handles = [open(p, "rb") for p in paths]
    try:
        headers = []
        for fh, p in zip(handles, paths):
            headers.append(_read_header(fh, p))
        names = _check_compatible(
            [
                {e["name"]: tuple(e["shape"]) for e in header["tensors"]}
                for header, _ in headers
            ]
        )
        entry_maps = [
            {e["name"]: e for e in header["tensors"]} for header, _ in headers
        ]
        k = len(paths)
        shapes = {name: tuple(entry_maps[0][name]["shape"]) for name in names}

        out_entries = []
        offset = 0
        for name in names:
            shape = shapes[name]
            count = int(np.prod(shape, dtype=np.int64)) if shape else 1
            out_entries.append(
                {"name": name, "shape": list(shape), "dtype": "f32", "offset": offset}
            )
            offset += count * 4
        out_header = {
            "metadata": {"source_count": k},
            "tensors": out_entries,
        }
        header_bytes = json.dumps(out_header, sort_keys=True, separators=(",", ":")).encode("utf-8")

        with open(out_path, "wb") as out:
            out.write(_MAGIC)
            out.write(struct.pack("<I", _VERSION))
            out.write(struct.pack("<Q", len(header_bytes)))
            out.write(header_bytes)
            for name in names:
                shape = shapes[name]
                count = int(np.prod(shape, dtype=np.int64)) if shape else 1
                parts = []
                for fh, (header, payload_start), entries in zip(handles, headers, entry_maps):
                    fh.seek(payload_start + entries[name]["offset"])
                    raw = fh.read(count * 4)
                    if len(raw) != count * 4:
                        raise ModelFormatError(f"truncated payload for {name!r}")
                    parts.append(np.frombuffer(raw, dtype="<f4").astype(np.float64))
                stack = np.stack(parts)
                stack.sort(axis=0)
                out.write((stack.sum(axis=0) / k).astype("<f4").tobytes())
    finally:
        for fh in handles:
            fh.close()


# ---------------------------------------------------------------------------
# scorers

class Scorer:
    """Interface: vocab_size, eos_id, and a conditional next-token distribution.

    next_dist(source, prefix) returns a probability vector over the vocab,
    non-negative and summing to 1 within 1e-6, deterministic for fixed
    inputs. Unconditional scorers (language models) ignore source.
    """

    vocab_size: int
    eos_id: int

    def next_dist(self, source, prefix) -> np.ndarray:
        raise NotImplementedError


def _check_dist(vec: np.ndarray, what: str) -> np.ndarray:
    vec = np.asarray(vec, dtype=np.float64)
    if vec.ndim != 1:
        raise ValueError(f"{what}: expected 1-d vector")
    if np.any(vec < 0):
        raise ValueError(f"{what}: negative probability")
    if abs(float(vec.sum()) - 1.0) > _NORM_TOL:
        raise ValueError(f"{what}: sums to {vec.sum():.9f}, not 1")
    vec.setflags(write=False)
    return vec


class TableScorer(Scorer):
    """Explicit conditional table over a tiny vocab; the brute-force oracle model.

    Contexts are (source ids, prefix ids) pairs; unlisted contexts fall back
    to the default vector.
    """

    def __init__(self, vocab: list[str], table: dict, default, eos_token: str = "eos"):
        if len(set(vocab)) != len(vocab):
            raise ModelFormatError("duplicate tokens in vocab")
        if eos_token not in vocab:
            raise ModelFormatError(f"eos token {eos_token!r} missing from vocab")
        self.vocab = list(vocab)
        self.vocab_size = len(vocab)
        self.eos_token = eos_token
        self.eos_id = self.vocab.index(eos_token)
        self.default = _check_dist(default, "default vector")
        if len(self.default) != self.vocab_size:
            raise ModelFormatError("default vector length != vocab size")
        self.table = {}
        for (src, prefix), vec in table.items():
            vec = _check_dist(vec, f"context {(src, prefix)}")
            if len(vec) != self.vocab_size:
                raise ModelFormatError(f"context {(src, prefix)}: vector length != vocab size")
            self.table[(tuple(src), tuple(prefix))] = vec

    def next_dist(self, source, prefix) -> np.ndarray:
        return self.table.get((tuple(source), tuple(prefix)), self.default)


def _fmt_ids(ids) -> str:
    return ",".join(str(i) for i in ids) if ids else "-"


def _parse_ids(text: str) -> tuple:
    return () if text == "-" else tuple(int(x) for x in text.split(","))


def save_table_scorer(m: TableScorer, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("tablescorer-v1\n")
        fh.write("vocab " + " ".join(m.vocab) + "\n")
        fh.write(f"eos {m.eos_token}\n")
        fh.write("default " + " ".join(repr(float(p)) for p in m.default) + "\n")
        for (src, prefix), vec in sorted(m.table.items()):
            fh.write(
                f"ctx {_fmt_ids(src)}|{_fmt_ids(prefix)} "
                + " ".join(repr(float(p)) for p in vec)
                + "\n"
            )


def load_table_scorer(path) -> TableScorer:
    vocab = None
    eos_token = "eos"
    default = None
    table = {}
    with open(path, encoding="utf-8") as fh:
        if fh.readline().strip() != "tablescorer-v1":
            raise ModelFormatError(f"{path}: expected header 'tablescorer-v1'")
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            kind, _, rest = line.partition(" ")
            if kind == "vocab":
                vocab = rest.split(" ")
            elif kind == "eos":
                eos_token = rest
            elif kind == "default":
                default = [float(x) for x in rest.split(" ")]
            elif kind == "ctx":
                key, _, probs = rest.partition(" ")
                src_txt, _, prefix_txt = key.partition("|")
                table[(_parse_ids(src_txt), _parse_ids(prefix_txt))] = [
                    float(x) for x in probs.split(" ")
                ]
            else:
                raise ModelFormatError(f"{path}:{lineno}: unknown line kind {kind!r}")
    if vocab is None or default is None:
        raise ModelFormatError(f"{path}: missing vocab or default line")
    return TableScorer(vocab, table, default, eos_token=eos_token)


class NGramScorer(Scorer):
    """Interpolated n-gram language model with a probability floor.

    Per-order maximum-likelihood estimates are mixed with fixed weights;
    orders whose context was never seen drop out and the remaining weights
    renormalize. The floor redistributes a little mass to every token so
    the support is full: P = (1 - floor * V) * P_interp + floor.
    """

    def __init__(self, order: int, vocab_size: int, eos_id: int, counts: dict,
                 weights, floor: float):
        if order < 1:
            raise ValueError("order must be >= 1")
        if not 0 <= eos_id < vocab_size:
            raise ValueError("eos_id out of range")
        weights = [float(w) for w in weights]
        if len(weights) != order or any(w < 0 for w in weights) or sum(weights) <= 0:
            raise ValueError("need one non-negative weight per order, not all zero")
        if not 0 < floor * vocab_size < 1:
            raise ValueError("floor * vocab_size must lie in (0, 1)")
        self.order = order
        self.vocab_size = vocab_size
        self.eos_id = eos_id
        self.weights = [w / sum(weights) for w in weights]
        self.floor = float(floor)
        self.counts = {tuple(g): int(c) for g, c in counts.items()}
        self.totals = {}
        for gram, c in self.counts.items():
            ctx = gram[:-1]
            self.totals[ctx] = self.totals.get(ctx, 0) + c

    def next_dist(self, source, prefix) -> np.ndarray:
        prefix = tuple(prefix)
        interp = np.zeros(self.vocab_size)
        active = 0.0
        for k in range(1, self.order + 1):
            ctx = prefix[len(prefix) - (k - 1):] if k > 1 else ()
            total = self.totals.get(ctx, 0)
            if total == 0:
                continue
            w = self.weights[k - 1]
            active += w
            for tok in range(self.vocab_size):
                c = self.counts.get(ctx + (tok,), 0)
                if c:
                    interp[tok] += w * c / total
        if active > 0:
            interp /= active
        else:
            interp[:] = 1.0 / self.vocab_size
        out = (1.0 - self.floor * self.vocab_size) * interp + self.floor
        out.setflags(write=False)
        return out


def ngram_train(corpus, order: int, *, vocab_size: int | None = None,
                eos_id: int | None = None, weights=None,
                floor: float | None = None) -> NGramScorer:
    """Count all k-grams (k <= order) over id sequences, appending eos to each.

    vocab_size and eos_id default to one past the largest id seen and that
    same value respectively, so plain id corpora work without ceremony. The
    default floor scales down with vocab size to keep total floor mass small.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    sequences = [list(seq) for seq in corpus]
    if not any(sequences):
        raise EmptyCorpusError("ngram_train: no tokens in corpus")
    max_id = max(max(seq) for seq in sequences if seq)
    if eos_id is None:
        eos_id = max_id + 1
    if vocab_size is None:
        vocab_size = max(max_id, eos_id) + 1
    counts: dict[tuple, int] = {}
    for seq in sequences:
        if not seq:
            continue
        toks = seq + [eos_id]
        for k in range(1, order + 1):
            for i in range(len(toks) - k + 1):
                gram = tuple(toks[i : i + k])
                counts[gram] = counts.get(gram, 0) + 1
    if weights is None:
        weights = [1.0 / order] * order
    if floor is None:
        floor = min(1e-4, 0.1 / vocab_size)
    return NGramScorer(order, vocab_size, eos_id, counts, weights, floor)


def save_ngram_scorer(m: NGramScorer, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"ngram-v1 {m.order} {m.vocab_size} {m.eos_id}\n")
        fh.write(f"floor {m.floor!r}\n")
        fh.write("weights " + " ".join(repr(w) for w in m.weights) + "\n")
        for gram in sorted(m.counts):
            fh.write(f"count {_fmt_ids(gram)} {m.counts[gram]}\n")


def load_ngram_scorer(path) -> NGramScorer:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 4 or header[0] != "ngram-v1":
            raise ModelFormatError(f"{path}: expected header 'ngram-v1 <order> <vocab> <eos>'")
        order, vocab_size, eos_id = int(header[1]), int(header[2]), int(header[3])
        floor = None
        weights = None
        counts = {}
        for lineno, line in enumerate(fh, start=2):
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "floor":
                floor = float(parts[1])
            elif parts[0] == "weights":
                weights = [float(w) for w in parts[1:]]
            elif parts[0] == "count":
                counts[_parse_ids(parts[1])] = int(parts[2])
            else:
                raise ModelFormatError(f"{path}:{lineno}: unknown line kind {parts[0]!r}")
    if floor is None or weights is None:
        raise ModelFormatError(f"{path}: missing floor or weights line")
    return NGramScorer(order, vocab_size, eos_id, counts, weights, floor)


# ---------------------------------------------------------------------------
# ensembling

def ensemble_next_dist(scorers: list[Scorer], source, prefix) -> np.ndarray:
    """Mean of the members' next-token distributions."""
    if not scorers:
        raise EmptyEnsembleError("ensemble needs at least one scorer")
    sizes = {s.vocab_size for s in scorers}
    if len(sizes) > 1:
        raise VocabMismatchError(f"member vocab sizes differ: {sorted(sizes)}")
    acc = np.zeros(scorers[0].vocab_size)
    for s in scorers:
        acc += s.next_dist(source, prefix)
    return acc / len(scorers)


class EnsembleScorer(Scorer):
    """Scorer view of a model list; next_dist is the member mean."""

    def __init__(self, scorers: list[Scorer]):
        if not scorers:
            raise EmptyEnsembleError("ensemble needs at least one scorer")
        sizes = {s.vocab_size for s in scorers}
        if len(sizes) > 1:
            raise VocabMismatchError(f"member vocab sizes differ: {sorted(sizes)}")
        eos = {s.eos_id for s in scorers}
        if len(eos) > 1:
            raise VocabMismatchError(f"member eos ids differ: {sorted(eos)}")
        self.scorers = list(scorers)
        self.vocab_size = scorers[0].vocab_size
        self.eos_id = scorers[0].eos_id

    def next_dist(self, source, prefix) -> np.ndarray:
        return ensemble_next_dist(self.scorers, source, prefix)


def load_scorer(path) -> Scorer:
    """Dispatch on the first header word: table scorer or n-gram model."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().split()
    kind = first[0] if first else ""
    if kind == "tablescorer-v1":
        return load_table_scorer(path)
    if kind == "ngram-v1":
        return load_ngram_scorer(path)
    raise ModelFormatError(f"{path}: unrecognized scorer header {kind!r}")
