"""Punctuation normalization, word tokenization, and German quote post-processing.

The normalizer is a versioned ordered rewrite table (straight quotes, single
spaces, ascii dashes). The tokenizer splits punctuation off words with a
non-breaking-prefix list per language; `detokenize` inverts it on canonically
spaced text. Everything here is a pure function over immutable rule tables.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources

from .errors import ModelFormatError

DEFAULT_RULES_VERSION = "moses-lite-1"

# Ordered (pattern, replacement) rewrites. No replacement may reintroduce a
# match for any rule, so a single pass is idempotent.
_DEFAULT_RULES: list[tuple[str, str]] = [
    (r"\r", ""),
    (r"[​‎‏﻿]", ""),
    (r"[     　]", " "),
    (r"[„“”‟«»″〝〞]", '"'),
    (r"[‘’‚‛‹›´ʹʼ`]", "'"),
    (r"''", '"'),
    (r"[–—‒―−]", "-"),
    (r"…", "..."),
    (r"[ \t]+", " "),
    (r"^ | $", ""),
]


@dataclass(frozen=True)
class NormalizationRules:
    """Ordered rewrite table with a version tag."""

    version: str
    rules: tuple[tuple[re.Pattern[str], str], ...]

    @classmethod
    def default(cls) -> "NormalizationRules":
        compiled = tuple((re.compile(p), r) for p, r in _DEFAULT_RULES)
        return cls(version=DEFAULT_RULES_VERSION, rules=compiled)

    def apply(self, text: str) -> str:
        for pattern, repl in self.rules:
            text = pattern.sub(repl, text)
        return text


def load_rules(path) -> NormalizationRules:
    """Read an ordered rule table: header `normrules-v1 <tag>`, then pattern<TAB>replacement lines."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    header = lines[0].split(" ", 1)
    if header[0] != "normrules-v1" or len(header) != 2:
        raise ModelFormatError(f"{path}: expected header 'normrules-v1 <version>'")
    rules = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ModelFormatError(f"{path}:{lineno}: expected pattern<TAB>replacement")
        rules.append((re.compile(parts[0]), parts[1]))
    return NormalizationRules(version=header[1], rules=tuple(rules))


def save_rules(rules: NormalizationRules, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"normrules-v1 {rules.version}\n")
        for pattern, repl in rules.rules:
            fh.write(f"{pattern.pattern}\t{repl}\n")


_DEFAULT = NormalizationRules.default()


def normalize_punct(text: str, rules: NormalizationRules | None = None) -> str:
    """Rewrite text to canonical punctuation (total, idempotent)."""
    return (rules or _DEFAULT).apply(text)


# Tokenization: characters peeled off chunk edges. Apostrophes stay attached
# (a trailing possessive apostrophe is indistinguishable from a closing quote).
_LEADING = set("\"([{¿¡")
_TRAILING = set("\".,!?;:)]}%")
_CLOSING = set(".,!?;:)]}%")  # attach left on detokenization
_OPENING = set("([{¿¡")  # attach right on detokenization

_PREFIX_CACHE: dict[str, frozenset[str]] = {}


def nonbreaking_prefixes(lang: str) -> frozenset[str]:
    """Per-language prefixes whose trailing period stays attached (one per line, UTF-8)."""
    if lang not in _PREFIX_CACHE:
        try:
            raw = resources.files("mtkit.data").joinpath(f"{lang}_prefixes.txt").read_text("utf-8")
        except FileNotFoundError:
            raw = ""
        _PREFIX_CACHE[lang] = frozenset(line.strip() for line in raw.splitlines() if line.strip())
    return _PREFIX_CACHE[lang]


def load_prefixes(path) -> frozenset[str]:
    with open(path, encoding="utf-8") as fh:
        return frozenset(line.strip() for line in fh if line.strip())


def _split_chunk(chunk: str, prefixes: frozenset[str]) -> list[str]:
    head: list[str] = []
    while chunk and chunk[0] in _LEADING:
        head.append(chunk[0])
        chunk = chunk[1:]
    tail: list[str] = []
    while chunk:
        if chunk.endswith("...") and len(chunk) >= 3:
            tail.append("...")
            chunk = chunk[:-3]
        elif chunk[-1] == "." and chunk[:-1] in prefixes:
            break
        elif chunk[-1] in _TRAILING and len(chunk) > 1:
            tail.append(chunk[-1])
            chunk = chunk[:-1]
        elif chunk[-1] in _TRAILING and len(chunk) == 1:
            tail.append(chunk)
            chunk = ""
        else:
            break
    return head + ([chunk] if chunk else []) + tail[::-1]


def word_tokenize(text: str, lang: str = "en", prefixes: frozenset[str] | None = None) -> list[str]:
    """Split normalized text into surface tokens (punctuation separated from words)."""
    if prefixes is None:
        prefixes = nonbreaking_prefixes(lang)
    tokens: list[str] = []
    for chunk in text.split():
        tokens.extend(_split_chunk(chunk, prefixes))
    return tokens


def detokenize(tokens: list[str], lang: str = "en") -> str:
    """Join tokens back into a sentence; inverse of word_tokenize on canonically spaced text."""
    out: list[str] = []
    quote_open = False
    glue_next = False
    for tok in tokens:
        if tok == '"':
            if quote_open:
                out.append(tok)  # closing: attach left
            else:
                if out and not glue_next:
                    out.append(" ")
                out.append(tok)
            glue_next = not quote_open
            quote_open = not quote_open
            continue
        if tok in _CLOSING or tok == "...":
            out.append(tok)
            glue_next = False
            continue
        if tok in _OPENING:
            if out and not glue_next:
                out.append(" ")
            out.append(tok)
            glue_next = True
            continue
        if out and not glue_next:
            out.append(" ")
        out.append(tok)
        glue_next = False
    return "".join(out)


def german_quote_postprocess(text: str) -> str:
    """Replace each paired ASCII double-quote span "x" with „x“; unpaired quotes stay."""
    positions = [i for i, ch in enumerate(text) if ch == '"']
    chars = list(text)
    for k in range(len(positions) // 2):
        chars[positions[2 * k]] = "„"
        chars[positions[2 * k + 1]] = "“"
    return "".join(chars)
