"""Shared fixtures: synthetic trilingual corpora, planted filter fixtures,
randomized table scorers, and small trained models reused across suites.

Everything is seeded; fixtures are deterministic across runs and test order.
"""

from __future__ import annotations

import itertools
import random

import numpy as np
import pytest

from mtkit import bpe, corpus, textnorm
from mtkit.models import TableScorer

EN_WORDS = (
    "the time year people way water day thing child world life hand part "
    "place work week case point company number group fact home month lot "
    "right study book eye job word business issue side kind head house "
    "service friend father power hour game line end member law car city name"
).split()

DE_WORDS = (
    "zeit jahr mensch weg wasser tag kind welt leben hand teil ort arbeit "
    "woche fall punkt firma zahl gruppe haus straße grün über schön müde "
    "bär tür buch auge wort geschäft seite kopf dienst freund vater stunde "
    "spiel ende mitglied gesetz stadt gemeinde name können äpfel größe"
).split()

RU_WORDS = (
    "время год человек путь вода день вещь ребёнок мир жизнь рука часть "
    "место работа неделя случай точка компания число группа факт дом месяц "
    "право книга глаз слово дело сторона голова услуга друг отец сила час "
    "игра конец член закон город имя привет спасибо утро вечер погода"
).split()

WORDS_BY_LANG = {"en": EN_WORDS, "de": DE_WORDS, "ru": RU_WORDS}


def make_sentence(rng: random.Random, lang: str, n_words: int | None = None) -> str:
    """A canonical normalized sentence: single spaces, balanced quotes,
    punctuation attached the way the tokenizer re-attaches it."""
    words = WORDS_BY_LANG[lang]
    if n_words is None:
        n_words = rng.randint(3, 12)
    toks = [rng.choice(words) for _ in range(n_words)]
    if n_words >= 6 and rng.random() < 0.3:
        toks[rng.randint(1, n_words - 3)] += ","
    if n_words >= 5 and rng.random() < 0.2:
        i = rng.randint(0, n_words - 3)
        j = rng.randint(i + 1, min(i + 3, n_words - 1))
        toks[i] = '"' + toks[i]
        toks[j] = toks[j] + '"'
    end = rng.choice([".", ".", ".", "!", "?", "..."])
    return " ".join(toks) + end


@pytest.fixture(scope="session")
def trilingual_lines() -> list[str]:
    """10k canonical lines cycling en/de/ru."""
    rng = random.Random(20240911)
    langs = ("en", "de", "ru")
    return [make_sentence(rng, langs[i % 3]) for i in range(10_000)]


@pytest.fixture(scope="session")
def fixture_bpe(trilingual_lines) -> bpe.BpeModel:
    """BPE model trained on the tokenized trilingual fixture."""
    tokenized = [
        " ".join(textnorm.word_tokenize(line, lang=("en", "de", "ru")[i % 3]))
        for i, line in enumerate(trilingual_lines[:3000])
    ]
    return bpe.bpe_train(tokenized, vocab_size=400)


@pytest.fixture(scope="session")
def langid_corpus():
    """(train, heldout): 1000 + 300 labeled lines per language."""
    rng = random.Random(431)
    train, heldout = [], []
    for lang in ("en", "de", "ru"):
        for i in range(1300):
            line = make_sentence(rng, lang)
            (train if i < 1000 else heldout).append((line, lang))
    return train, heldout


@pytest.fixture(scope="session")
def langid_model(langid_corpus):
    train, _ = langid_corpus
    return corpus.langid_train(train, seed=0)


# ---------------------------------------------------------------------------
# planted filter fixture

def _clean_pair(rng: random.Random, seq_no: int) -> corpus.ParallelExample:
    len_s = rng.randint(5, 20)
    len_t = rng.randint(max(1, -(-len_s * 4 // 5)), len_s * 5 // 4)  # ratio <= 1.25
    source = " ".join(rng.choice(EN_WORDS) for _ in range(len_s))
    target = " ".join(rng.choice(DE_WORDS) for _ in range(len_t))
    score = None if rng.random() < 0.5 else round(rng.uniform(0.6, 1.0), 3)
    return corpus.ParallelExample(source, target, score, sequence_no=seq_no)


@pytest.fixture(scope="session")
def planted_filter_fixture():
    """1000 pairs: 900 clean plus 25 violations each of langid_src, too_long,
    ratio, and score. Returns (pairs, expected report)."""
    rng = random.Random(77)
    tagged = []
    for _ in range(900):
        tagged.append((None, _clean_pair(rng, 0)))
    for _ in range(25):
        bad = corpus.ParallelExample(
            " ".join(rng.choice(RU_WORDS) for _ in range(10)),
            " ".join(rng.choice(DE_WORDS) for _ in range(10)),
        )
        tagged.append(("langid_src", bad))
    for _ in range(25):
        n = rng.randint(251, 260)
        bad = corpus.ParallelExample(
            " ".join(rng.choice(EN_WORDS) for _ in range(n)),
            " ".join(rng.choice(DE_WORDS) for _ in range(n)),
        )
        tagged.append(("too_long", bad))
    for _ in range(25):
        bad = corpus.ParallelExample(
            " ".join(rng.choice(EN_WORDS) for _ in range(10)),
            " ".join(rng.choice(DE_WORDS) for _ in range(14)),
        )
        tagged.append(("ratio", bad))
    for _ in range(25):
        bad = corpus.ParallelExample(
            " ".join(rng.choice(EN_WORDS) for _ in range(8)),
            " ".join(rng.choice(DE_WORDS) for _ in range(8)),
            external_score=round(rng.uniform(0.1, 0.59), 3),
        )
        tagged.append(("score", bad))
    rng.shuffle(tagged)
    pairs = [
        corpus.ParallelExample(
            p.source, p.target, p.external_score, p.provenance, seq_no
        )
        for seq_no, (_, p) in enumerate(tagged)
    ]
    expected = corpus.FilterReport(total=1000, kept=900)
    for rule, _ in tagged:
        if rule is not None:
            expected.rejected[rule] += 1
    return pairs, expected


# ---------------------------------------------------------------------------
# domain fixture

MED_EN = (
    "patient treatment clinical dose therapy symptom diagnosis trial vaccine "
    "protein cell tumor blood infection chronic acute kidney liver surgery "
    "antibody placebo lesion syndrome receptor biopsy"
).split()
NEWS_EN = (
    "government election market police minister parliament economy budget "
    "championship weather festival airport senator traffic cinema tourism "
    "strike referendum border inflation coalition stadium"
).split()
MED_RU = (
    "пациент лечение клинический доза терапия симптом диагноз вакцина белок "
    "клетка опухоль кровь инфекция хронический острый почка печень операция "
    "антитело плацебо синдром рецептор биопсия"
).split()
NEWS_RU = (
    "правительство выборы рынок полиция министр парламент экономика бюджет "
    "чемпионат фестиваль аэропорт сенатор трафик кино туризм забастовка "
    "референдум граница инфляция коалиция стадион"
).split()


def make_domain_line(rng: random.Random, markers: list[str], filler: list[str],
                     n_markers: int = 4, n_filler: int = 4) -> str:
    toks = [rng.choice(markers) for _ in range(n_markers)]
    toks += [rng.choice(filler) for _ in range(n_filler)]
    rng.shuffle(toks)
    return " ".join(toks)


@pytest.fixture(scope="session")
def domain_fixture():
    """(med_en, news_en, med_ru, news_ru): 1000 lines each, separable."""
    rng = random.Random(909)
    med_en = [make_domain_line(rng, MED_EN, EN_WORDS) for _ in range(1000)]
    news_en = [make_domain_line(rng, NEWS_EN, EN_WORDS) for _ in range(1000)]
    med_ru = [make_domain_line(rng, MED_RU, RU_WORDS) for _ in range(1000)]
    news_ru = [make_domain_line(rng, NEWS_RU, RU_WORDS) for _ in range(1000)]
    return med_en, news_en, med_ru, news_ru


# ---------------------------------------------------------------------------
# randomized table scorers

def enumerate_prefixes(vocab_n: int, eos_id: int, max_len: int):
    """All eos-free prefixes a decoder can reach within max_len steps."""
    non_eos = [t for t in range(vocab_n) if t != eos_id]
    for length in range(max_len):
        yield from itertools.product(non_eos, repeat=length)


def make_table_scorer(vocab_n: int, max_len: int, rng: random.Random,
                      source=(0, 1), zero_frac: float = 0.0) -> TableScorer:
    """Random full table over all reachable contexts of one source sentence.

    zero_frac > 0 plants exact zero probabilities to exercise the -inf paths.
    """
    vocab = [f"t{i}" for i in range(vocab_n - 1)] + ["eos"]
    eos_id = vocab_n - 1
    table = {}
    for prefix in enumerate_prefixes(vocab_n, eos_id, max_len):
        vec = np.array([rng.random() + 0.01 for _ in range(vocab_n)])
        if zero_frac > 0.0:
            for tok in range(vocab_n):
                if rng.random() < zero_frac:
                    vec[tok] = 0.0
            if vec.sum() == 0.0:
                vec[rng.randrange(vocab_n)] = 1.0
        vec = vec / vec.sum()
        table[(tuple(source), prefix)] = vec
    default = np.ones(vocab_n) / vocab_n
    return TableScorer(vocab, table, default)


def make_lm_scorer(vocab_n: int, max_len: int, rng: random.Random) -> TableScorer:
    """Unconditional variant: contexts keyed on the empty source."""
    return make_table_scorer(vocab_n, max_len, rng, source=())


@pytest.fixture(scope="session")
def random_decode_instances():
    """50 (fwd, lm, source, max_len) tuples for oracle-equivalence testing."""
    rng = random.Random(1234)
    instances = []
    for _ in range(50):
        vocab_n = rng.randint(2, 5)
        max_len = rng.randint(1, 4)
        source = (0,) if vocab_n == 2 else (0, 1)
        fwd = make_table_scorer(vocab_n, max_len, rng, source=source)
        lm = make_lm_scorer(vocab_n, max_len, rng)
        instances.append((fwd, lm, source, max_len))
    return instances
