"""Byte pair encoding: training, encoding with optional merge dropout, decoding.

Words are split on whitespace and encoded independently with an end-of-word
marker, so decode(encode(x, 0)) == x holds for single-spaced stripped text.
The vocab budget `vocab_size` covers everything stored: the four specials,
the word-end marker, the corpus characters, and the merges.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field

from .errors import EmptyCorpusError, ModelFormatError, UnknownIdError, VocabTooSmallError

PAD, UNK, BOS, EOS = "<pad>", "<unk>", "<bos>", "<eos>"
WORD_END = "</w>"


@dataclass
class BpeModel:
    """Ordered merge list plus token-string -> id vocabulary."""

    merges: list[tuple[str, str]]
    vocab: dict[str, int]
    vocab_size: int  # configured target, >= len(vocab)

    def __post_init__(self):
        self.merge_ranks = {pair: rank for rank, pair in enumerate(self.merges)}
        self.id_to_token = {i: t for t, i in self.vocab.items()}
        self._zero_dropout_cache: dict[str, tuple[str, ...]] = {}
        self._validate()

    def _validate(self):
        if len(self.vocab) > self.vocab_size:
            raise ModelFormatError("stored vocab exceeds configured vocab_size")
        if len(self.id_to_token) != len(self.vocab):
            raise ModelFormatError("duplicate ids in vocab")
        known = set(self.vocab) - {PAD, UNK, BOS, EOS}
        for left, right in self.merges:
            if left not in known or right not in known:
                raise ModelFormatError(f"merge ({left!r},{right!r}) references unknown symbol")
            if left + right not in self.vocab:
                raise ModelFormatError(f"merged symbol {left + right!r} missing from vocab")

    @property
    def pad_id(self) -> int:
        return self.vocab[PAD]

    @property
    def unk_id(self) -> int:
        return self.vocab[UNK]

    @property
    def bos_id(self) -> int:
        return self.vocab[BOS]

    @property
    def eos_id(self) -> int:
        return self.vocab[EOS]


def bpe_train(corpus, vocab_size: int) -> BpeModel:
    """Learn greedy most-frequent-pair merges from an iterable of text lines.

    Ties between equally frequent pairs go to the lexicographically smaller
    pair, so training is deterministic given the corpus.
    """
    word_freqs: Counter[str] = Counter()
    for line in corpus:
        word_freqs.update(line.split())
    if not word_freqs:
        raise EmptyCorpusError("bpe_train: corpus contains no words")

    alphabet = sorted({ch for word in word_freqs for ch in word})
    base = [PAD, UNK, BOS, EOS, WORD_END] + alphabet
    if vocab_size <= len(base):
        raise VocabTooSmallError(
            f"vocab_size {vocab_size} <= base symbol count {len(base)} (no room for merges)"
        )

    words = {word: tuple(word) + (WORD_END,) for word in word_freqs}
    merges: list[tuple[str, str]] = []
    while len(base) + len(merges) < vocab_size:
        pair_counts: Counter[tuple[str, str]] = Counter()
        for word, symbols in words.items():
            freq = word_freqs[word]
            for i in range(len(symbols) - 1):
                pair_counts[(symbols[i], symbols[i + 1])] += freq
        if not pair_counts:
            break
        best = min(pair_counts.items(), key=lambda kv: (-kv[1], kv[0]))[0]
        merges.append(best)
        merged = best[0] + best[1]
        for word, symbols in words.items():
            if merged not in word + WORD_END:
                continue
            out = []
            i = 0
            while i < len(symbols):
                if i + 1 < len(symbols) and (symbols[i], symbols[i + 1]) == best:
                    out.append(merged)
                    i += 2
                else:
                    out.append(symbols[i])
                    i += 1
            words[word] = tuple(out)

    vocab = {tok: i for i, tok in enumerate(base)}
    for left, right in merges:
        sym = left + right
        if sym not in vocab:
            vocab[sym] = len(vocab)
    return BpeModel(merges=merges, vocab=vocab, vocab_size=vocab_size)


def _encode_word(model: BpeModel, word: str, rng: random.Random | None, dropout_p: float) -> tuple[str, ...]:
    if dropout_p == 0.0 and word in model._zero_dropout_cache:
        return model._zero_dropout_cache[word]
    ranks = model.merge_ranks
    symbols = list(word) + [WORD_END]
    while len(symbols) > 1:
        best = None
        for i in range(len(symbols) - 1):
            rank = ranks.get((symbols[i], symbols[i + 1]))
            if rank is None:
                continue
            if dropout_p > 0.0 and rng.random() < dropout_p:
                continue
            if best is None or (rank, i) < best:
                best = (rank, i)
        if best is None:
            break
        i = best[1]
        symbols[i : i + 2] = [symbols[i] + symbols[i + 1]]
    result = tuple(symbols)
    if dropout_p == 0.0:
        model._zero_dropout_cache[word] = result
    return result


def bpe_encode(model: BpeModel, text: str, dropout_p: float = 0.0, seed: int = 0) -> list[int]:
    """Encode text to token ids; with dropout_p > 0 each applicable merge is
    skipped with that probability via a generator seeded per call."""
    if not 0.0 <= dropout_p < 1.0:
        raise ValueError(f"dropout_p must be in [0, 1), got {dropout_p}")
    rng = random.Random(seed) if dropout_p > 0.0 else None
    ids: list[int] = []
    unk = model.unk_id
    for word in text.split():
        for sym in _encode_word(model, word, rng, dropout_p):
            ids.append(model.vocab.get(sym, unk))
    return ids


def bpe_decode(model: BpeModel, ids) -> str:
    """Inverse of dropout-0 encoding: strips pad/bos/unk, truncates at eos."""
    pieces: list[str] = []
    skip = {model.pad_id, model.bos_id, model.unk_id}
    eos = model.eos_id
    for tid in ids:
        if tid == eos:
            break
        if tid in skip:
            continue
        tok = model.id_to_token.get(tid)
        if tok is None:
            raise UnknownIdError(f"id {tid} not in vocab")
        pieces.append(tok)
    return "".join(pieces).replace(WORD_END, " ").rstrip()


def save_model(model: BpeModel, path) -> None:
    """Write the text container: `bpe-v1 <vocab_size>`, vocab lines, blank line, merge lines."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"bpe-v1 {model.vocab_size}\n")
        for tok, tid in sorted(model.vocab.items(), key=lambda kv: kv[1]):
            fh.write(f"{tok}\t{tid}\n")
        fh.write("\n")
        for left, right in model.merges:
            fh.write(f"{left} {right}\n")


def load_model(path) -> BpeModel:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    header = lines[0].split()
    if len(header) != 2 or header[0] != "bpe-v1":
        raise ModelFormatError(f"{path}: expected header 'bpe-v1 <vocab_size>'")
    vocab: dict[str, int] = {}
    merges: list[tuple[str, str]] = []
    section = "vocab"
    for lineno, line in enumerate(lines[1:], start=2):
        if section == "vocab":
            if line == "":
                section = "merges"
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ModelFormatError(f"{path}:{lineno}: expected token<TAB>id")
            vocab[parts[0]] = int(parts[1])
        else:
            if line == "":
                continue
            parts = line.split(" ")
            if len(parts) != 2:
                raise ModelFormatError(f"{path}:{lineno}: expected 'left right'")
            merges.append((parts[0], parts[1]))
    return BpeModel(merges=merges, vocab=vocab, vocab_size=int(header[1]))


@dataclass(frozen=True)
class PairTokenizer:
    """Tokenizer setup for a language pair: one shared model, or one per side."""

    source: BpeModel
    target: BpeModel
    shared: bool

    @classmethod
    def make_shared(cls, model: BpeModel) -> "PairTokenizer":
        return cls(source=model, target=model, shared=True)

    @classmethod
    def make_per_language(cls, source: BpeModel, target: BpeModel) -> "PairTokenizer":
        if source is target:
            raise ValueError("per-language setup requires two independent models")
        return cls(source=source, target=target, shared=False)

    def encode_source(self, text: str, dropout_p: float = 0.0, seed: int = 0) -> list[int]:
        return bpe_encode(self.source, text, dropout_p, seed)

    def encode_target(self, text: str, dropout_p: float = 0.0, seed: int = 0) -> list[int]:
        return bpe_encode(self.target, text, dropout_p, seed)
