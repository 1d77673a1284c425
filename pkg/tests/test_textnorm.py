"""Normalization, tokenization, detokenization, and German quotes."""

import random

import pytest

from mtkit import textnorm
from mtkit.errors import ModelFormatError
from mtkit.textnorm import (
    NormalizationRules,
    detokenize,
    german_quote_postprocess,
    load_prefixes,
    load_rules,
    nonbreaking_prefixes,
    normalize_punct,
    save_rules,
    word_tokenize,
)

# ---------------------------------------------------------------------------
# normalize_punct


def test_normalize_curly_quotes_and_spaces():
    assert normalize_punct("“Hello”  world") == '"Hello" world'


def test_normalize_identity_on_plain_text():
    assert normalize_punct("abc") == "abc"


def test_normalize_dashes_and_ellipsis():
    assert normalize_punct("a – b — c") == "a - b - c"
    assert normalize_punct("wait…") == "wait..."


def test_normalize_single_quotes():
    assert normalize_punct("it’s ‘fine’") == "it's 'fine'"


def test_normalize_strips_edges_and_collapses_runs():
    assert normalize_punct("  a   b\tc ") == "a b c"


def test_normalize_idempotent_on_fixture(trilingual_lines):
    for line in trilingual_lines[:2000]:
        once = normalize_punct(line)
        assert normalize_punct(once) == once


def test_normalize_idempotent_on_noisy_random_text():
    rng = random.Random(7)
    pool = "ab “”‘’–…\"'.-  ,!?()"
    for _ in range(500):
        text = "".join(rng.choice(pool) for _ in range(rng.randint(0, 40)))
        once = normalize_punct(text)
        assert normalize_punct(once) == once


# ---------------------------------------------------------------------------
# rule tables


def test_default_rules_version():
    assert NormalizationRules.default().version == textnorm.DEFAULT_RULES_VERSION


def test_rules_save_load_roundtrip(tmp_path):
    rules = NormalizationRules.default()
    path = tmp_path / "rules.txt"
    save_rules(rules, path)
    loaded = load_rules(path)
    assert loaded.version == rules.version
    assert [(p.pattern, r) for p, r in loaded.rules] == [
        (p.pattern, r) for p, r in rules.rules
    ]
    assert loaded.apply("“x”  y") == normalize_punct("“x”  y")


def test_rules_bad_header(tmp_path):
    path = tmp_path / "rules.txt"
    path.write_text("wrong header\n")
    with pytest.raises(ModelFormatError):
        load_rules(path)


def test_rules_bad_line(tmp_path):
    path = tmp_path / "rules.txt"
    path.write_text("normrules-v1 x\nno tab here\n")
    with pytest.raises(ModelFormatError):
        load_rules(path)


# ---------------------------------------------------------------------------
# word_tokenize


def test_tokenize_basic():
    assert word_tokenize("Hello, world.") == ["Hello", ",", "world", "."]


def test_tokenize_empty():
    assert word_tokenize("") == []


def test_tokenize_single_word():
    assert word_tokenize("word") == ["word"]


def test_tokenize_quotes_and_brackets():
    assert word_tokenize('"Hi" (there)') == ['"', "Hi", '"', "(", "there", ")"]


def test_tokenize_ellipsis_is_one_token():
    assert word_tokenize("Wait... what?") == ["Wait", "...", "what", "?"]
    assert word_tokenize("...") == ["..."]


def test_tokenize_nonbreaking_prefix():
    # "Dr." is on the English prefix list, so the period stays attached.
    assert word_tokenize("Dr. Smith arrived.") == ["Dr.", "Smith", "arrived", "."]


def test_tokenize_german_prefix():
    assert "z.b" in nonbreaking_prefixes("de") or "bzw" in nonbreaking_prefixes("de")
    assert word_tokenize("bzw. morgen", lang="de") == ["bzw.", "morgen"]


def test_tokenize_explicit_prefixes_override():
    assert word_tokenize("foo. bar", prefixes=frozenset({"foo"})) == ["foo.", "bar"]
    assert word_tokenize("foo. bar", prefixes=frozenset()) == ["foo", ".", "bar"]


def test_tokenize_unknown_language_prefixes_empty():
    assert nonbreaking_prefixes("xx") == frozenset()


def test_load_prefixes_file(tmp_path):
    path = tmp_path / "p.txt"
    path.write_text("abc\n\n  def \n", encoding="utf-8")
    assert load_prefixes(path) == frozenset({"abc", "def"})


# ---------------------------------------------------------------------------
# detokenize


def test_detokenize_basic():
    assert detokenize(["Hello", ",", "world", "."]) == "Hello, world."


def test_detokenize_quotes_pair():
    toks = ["He", "said", '"', "go", "home", '"', "."]
    assert detokenize(toks) == 'He said "go home".'


def test_detokenize_brackets():
    assert detokenize(["a", "(", "b", ")", "c"]) == "a (b) c"


def test_roundtrip_fixture(trilingual_lines):
    langs = ("en", "de", "ru")
    for i, line in enumerate(trilingual_lines):
        lang = langs[i % 3]
        norm = normalize_punct(line)
        assert detokenize(word_tokenize(norm, lang=lang), lang=lang) == norm


def test_roundtrip_handpicked():
    for text in [
        'She shouted "stop"!',
        "One, two, three...",
        "(a) b; c: d.",
        "Really?!",
    ]:
        assert detokenize(word_tokenize(text)) == text


# ---------------------------------------------------------------------------
# german_quote_postprocess


def test_german_quotes_paired():
    assert german_quote_postprocess('Er sagte "Hallo" zu mir') == "Er sagte „Hallo“ zu mir"


def test_german_quotes_no_quotes():
    assert german_quote_postprocess("kein Zitat") == "kein Zitat"


def test_german_quotes_unpaired_untouched():
    assert german_quote_postprocess('ein " allein') == 'ein " allein'


def test_german_quotes_two_pairs_plus_stray():
    out = german_quote_postprocess('"a" und "b" und " c')
    assert out == '„a“ und „b“ und " c'


def test_german_quotes_edits_only_quote_positions():
    rng = random.Random(13)
    for _ in range(300):
        n = rng.randint(0, 30)
        text = "".join(rng.choice('ab" ') for _ in range(n))
        out = german_quote_postprocess(text)
        assert len(out) == len(text)
        for a, b in zip(text, out):
            if a == b:
                continue
            assert a == '"' and b in "„“"
