"""Decoding: beam search with optional shallow fusion, exhaustive exact
search (the test oracle), top-k sampled generation, and noisy-channel
re-ranking of beam candidates.

The partial-hypothesis score is the recurrence
    S(y_1..n) = S(y_1..n-1) + log P_fwd(y_n | y_<n, x) + lam_sf * log P_lm(y_n | y_<n)
with S(empty) = 0. The terminating eos is scored like any other token.
Exact search scores sequences with identical arithmetic (same operations,
same order), so saturated-beam agreement is bit-exact, not approximate.

Tie-breaking is (-score, token tuple, insertion order) everywhere: lower
token ids win, a prefix sorts before its extensions, earlier insertion
wins exact ties.
"""

from __future__ import annotations

import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .bleu import corpus_bleu
from .errors import (
    EmptyCandidateListError,
    NoCompletedHypothesisError,
    SearchSpaceTooLargeError,
    VocabMismatchError,
)
from .models import EnsembleScorer, Scorer


@dataclass(frozen=True)
class DecodeConfig:
    beam_size: int = 4
    max_len: int = 50
    n_candidates: int = 15
    length_penalty_alpha: float = 0.0
    fusion_lambda: float = 0.0
    sample_k: int = 500
    seed: int = 0

    def __post_init__(self):
        if self.beam_size < 1 or self.max_len < 1 or self.n_candidates < 1:
            raise ValueError("beam_size, max_len, n_candidates must be >= 1")
        if self.fusion_lambda < 0:
            raise ValueError("fusion_lambda must be >= 0")
        if self.sample_k < 1:
            raise ValueError("sample_k must be >= 1")


@dataclass
class Candidate:
    tokens: tuple[int, ...]
    fwd_logprob: float
    lm_logprob: float | None = None
    rev_logprob: float | None = None
    fused_score: float = 0.0
    completed: bool = True
    combined_score: float | None = None


@dataclass(frozen=True)
class NoisyChannelConfig:
    lambda_ncr: float = 0.6
    normalize_by_length: bool = False  # experimental: per-token component scores

    def __post_init__(self):
        if self.lambda_ncr < 0:
            raise ValueError("lambda_ncr must be >= 0")


def _as_scorer(fwd) -> Scorer:
    """Accept a single scorer or a list to ensemble."""
    if isinstance(fwd, Scorer):
        return fwd
    return EnsembleScorer(list(fwd))


def _length_penalty(n: int, alpha: float) -> float:
    return ((5.0 + n) / 6.0) ** alpha


def _log_dist(dist: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(dist)


def beam_search(fwd, lm, source, cfg: DecodeConfig) -> list[Candidate]:
    """Return up to min(n_candidates, beam_size) completed hypotheses.

    Every eos-expansion of a surviving partial is recorded, and the search
    always runs all max_len steps, so a saturated beam enumerates exactly
    the sequences exact_search does. If nothing completes, the best partial
    is returned alone with completed=False.
    """
    fwd = _as_scorer(fwd)
    if lm is not None:
        lm = _as_scorer(lm)
    source = tuple(source)
    if not source:
        raise ValueError("source must be non-empty")
    lam = cfg.fusion_lambda
    if lam > 0:
        if lm is None:
            raise ValueError("fusion_lambda > 0 requires a language model")
        if lm.vocab_size != fwd.vocab_size:
            raise VocabMismatchError(
                f"lm vocab {lm.vocab_size} != forward vocab {fwd.vocab_size}"
            )
    vocab_size = fwd.vocab_size
    eos = fwd.eos_id

    # (score, tokens, fwd_sum, lm_sum)
    beams = [(0.0, (), 0.0, 0.0)]
    completed: list[Candidate] = []
    for _ in range(cfg.max_len):
        if not beams:
            break
        expansions = []
        for score, tokens, fwd_sum, lm_sum in beams:
            logf = _log_dist(fwd.next_dist(source, tokens))
            logl = _log_dist(lm.next_dist((), tokens)) if lam > 0 else None
            for tok in range(vocab_size):
                flp = float(logf[tok])
                if lam > 0:
                    llp = float(logl[tok])
                    new_score = score + flp + lam * llp
                else:
                    llp = 0.0
                    new_score = score + flp
                if new_score == float("-inf"):
                    continue
                entry = (new_score, tokens + (tok,), fwd_sum + flp, lm_sum + llp)
                if tok == eos:
                    completed.append(_finish(entry, lam, cfg.length_penalty_alpha))
                else:
                    expansions.append(entry)
        expansions.sort(key=lambda e: (-e[0], e[1]))
        beams = expansions[: cfg.beam_size]

    limit = min(cfg.n_candidates, cfg.beam_size)
    if completed:
        completed.sort(key=lambda c: (-c.fused_score, c.tokens))
        return completed[:limit]
    if beams:
        best = beams[0]
        flagged = _finish(best, lam, cfg.length_penalty_alpha)
        flagged.completed = False
        return [flagged]
    raise NoCompletedHypothesisError("all expansions hit zero-probability tokens")


def _finish(entry, lam: float, alpha: float) -> Candidate:
    score, tokens, fwd_sum, lm_sum = entry
    fused = score if alpha == 0 else score / _length_penalty(len(tokens), alpha)
    return Candidate(
        tokens=tokens,
        fwd_logprob=fwd_sum,
        lm_logprob=lm_sum if lam > 0 else None,
        fused_score=fused,
    )


def exact_search(fwd, lm, source, max_len: int, fusion_lambda: float = 0.0) -> Candidate:
    """Score every eos-terminated sequence of length <= max_len; return the argmax.

    Shares the beam recurrence arithmetic operation for operation, so it is
    a bit-exact oracle rather than an approximate one.
    """
    fwd = _as_scorer(fwd)
    if lm is not None:
        lm = _as_scorer(lm)
    source = tuple(source)
    lam = fusion_lambda
    if lam > 0 and lm is None:
        raise ValueError("fusion_lambda > 0 requires a language model")
    vocab_size = fwd.vocab_size
    eos = fwd.eos_id
    if vocab_size ** max_len > 10 ** 6:
        raise SearchSpaceTooLargeError(
            f"{vocab_size}^{max_len} sequences exceed the enumeration budget"
        )

    best: Candidate | None = None
    # prefix (eos-free), score, fwd_sum, lm_sum
    stack = [((), 0.0, 0.0, 0.0)]
    while stack:
        prefix, score, fwd_sum, lm_sum = stack.pop()
        logf = _log_dist(fwd.next_dist(source, prefix))
        logl = _log_dist(lm.next_dist((), prefix)) if lam > 0 else None
        for tok in range(vocab_size):
            flp = float(logf[tok])
            if lam > 0:
                llp = float(logl[tok])
                new_score = score + flp + lam * llp
            else:
                llp = 0.0
                new_score = score + flp
            if new_score == float("-inf"):
                continue
            tokens = prefix + (tok,)
            if tok == eos:
                if (
                    best is None
                    or new_score > best.fused_score
                    or (new_score == best.fused_score and tokens < best.tokens)
                ):
                    best = Candidate(
                        tokens=tokens,
                        fwd_logprob=fwd_sum + flp,
                        lm_logprob=lm_sum + llp if lam > 0 else None,
                        fused_score=new_score,
                    )
            elif len(tokens) < max_len:
                stack.append((tokens, new_score, fwd_sum + flp, lm_sum + llp))
    if best is None:
        raise NoCompletedHypothesisError("no eos-terminated sequence has finite score")
    return best


def topk_sample(fwd, source, cfg: DecodeConfig) -> Candidate:
    """Sample one sequence, drawing each step from the renormalized top-k.

    sample_k = 1 reduces to greedy decoding (argmax with lowest-id ties).
    fwd_logprob accumulates the raw model probabilities of the sampled
    tokens, not the renormalized ones.
    """
    fwd = _as_scorer(fwd)
    source = tuple(source)
    rng = random.Random(cfg.seed)
    eos = fwd.eos_id
    tokens: tuple[int, ...] = ()
    fwd_sum = 0.0
    completed = False
    for _ in range(cfg.max_len):
        dist = fwd.next_dist(source, tokens)
        order = sorted(range(fwd.vocab_size), key=lambda t: (-dist[t], t))
        top = order[: cfg.sample_k]
        total = float(sum(dist[t] for t in top))
        r = rng.random() * total
        chosen = top[-1]
        acc = 0.0
        for t in top:
            acc += float(dist[t])
            if r < acc:
                chosen = t
                break
        p = float(dist[chosen])
        fwd_sum += math.log(p) if p > 0 else float("-inf")
        tokens += (chosen,)
        if chosen == eos:
            completed = True
            break
    return Candidate(
        tokens=tokens, fwd_logprob=fwd_sum, fused_score=fwd_sum, completed=completed
    )


def sequence_logprob(scorer, source, tokens) -> float:
    """Independent recomputation: sum of per-step log next_dist[token]."""
    scorer = _as_scorer(scorer)
    source = tuple(source)
    tokens = tuple(tokens)
    total = 0.0
    for i, tok in enumerate(tokens):
        p = float(scorer.next_dist(source, tokens[:i])[tok])
        total += math.log(p) if p > 0 else float("-inf")
    return total


def noisy_channel_rerank(cands: list[Candidate], rev, lm, cfg: NoisyChannelConfig,
                         source) -> list[Candidate]:
    """Re-rank candidates by fwd + lam * (rev + lm) component sums.

    The forward term reuses each candidate's fwd_logprob from decoding (an
    ensemble forward pass already averaged there); the reverse model scores
    the source (plus its own eos) conditioned on the candidate; the language
    model scores the candidate unconditionally, including its eos. With
    normalize_by_length each component becomes a per-token average before
    combining (experimental, off by default). Returns a new sorted list over
    the same candidate objects; ties keep input order.
    """
    if not cands:
        raise EmptyCandidateListError("nothing to re-rank")
    rev = _as_scorer(rev)
    lm = _as_scorer(lm)
    source = tuple(source)
    rev_target = source + (rev.eos_id,)
    lam = cfg.lambda_ncr
    for cand in cands:
        cand.rev_logprob = sequence_logprob(rev, cand.tokens, rev_target)
        cand.lm_logprob = sequence_logprob(lm, (), cand.tokens)
        fwd_term, rev_term, lm_term = cand.fwd_logprob, cand.rev_logprob, cand.lm_logprob
        if cfg.normalize_by_length:
            n = max(len(cand.tokens), 1)
            fwd_term, rev_term, lm_term = (
                fwd_term / n, rev_term / len(rev_target), lm_term / n,
            )
        if lam == 0:
            cand.combined_score = fwd_term
        else:
            cand.combined_score = fwd_term + lam * (rev_term + lm_term)
    return sorted(cands, key=lambda c: -c.combined_score)


# ---------------------------------------------------------------------------
# batch drivers

def decode_batch(fwd, lm, sources, cfg: DecodeConfig, threads: int = 1):
    """Beam-decode many sources; output order follows input order."""
    sources = list(sources)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda s: beam_search(fwd, lm, s, cfg), sources))
    return [beam_search(fwd, lm, s, cfg) for s in sources]


def sample_batch(fwd, sources, cfg: DecodeConfig, threads: int = 1):
    """Sample one candidate per source with per-line seeds cfg.seed + index."""
    sources = list(sources)
    configs = [replace(cfg, seed=cfg.seed + i) for i in range(len(sources))]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda sc: topk_sample(fwd, sc[0], sc[1]),
                                 zip(sources, configs)))
    return [topk_sample(fwd, s, c) for s, c in zip(sources, configs)]


# ---------------------------------------------------------------------------
# candidate dump format

def _fmt_opt(value: float | None) -> str:
    return "-" if value is None else repr(float(value))


def _parse_opt(text: str) -> float | None:
    return None if text == "-" else float(text)


def format_candidates(cands_per_sentence) -> list[str]:
    """One line per candidate: idx, rank, fwd, lm, rev, combined, tokens."""
    lines = []
    for idx, cands in enumerate(cands_per_sentence):
        for rank, cand in enumerate(cands):
            tokens = ",".join(str(t) for t in cand.tokens)
            lines.append(
                "\t".join(
                    [
                        str(idx),
                        str(rank),
                        repr(float(cand.fwd_logprob)),
                        _fmt_opt(cand.lm_logprob),
                        _fmt_opt(cand.rev_logprob),
                        _fmt_opt(cand.combined_score),
                        tokens,
                    ]
                )
            )
    return lines


def parse_candidates(lines, eos_id: int | None = None) -> list[list[Candidate]]:
    """Inverse of format_candidates; completion inferred from the last token."""
    sentences: dict[int, list[tuple[int, Candidate]]] = {}
    for line in lines:
        line = line.rstrip("\n")
        if not line:
            continue
        cols = line.split("\t")
        if len(cols) != 7:
            raise ValueError(f"expected 7 tab-separated columns, got {len(cols)}")
        idx, rank = int(cols[0]), int(cols[1])
        tokens = tuple(int(t) for t in cols[6].split(",")) if cols[6] else ()
        cand = Candidate(
            tokens=tokens,
            fwd_logprob=float(cols[2]),
            lm_logprob=_parse_opt(cols[3]),
            rev_logprob=_parse_opt(cols[4]),
            fused_score=float(cols[2]),
            completed=(tokens[-1] == eos_id) if (eos_id is not None and tokens) else True,
            combined_score=_parse_opt(cols[5]),
        )
        sentences.setdefault(idx, []).append((rank, cand))
    return [
        [cand for _, cand in sorted(group, key=lambda rc: rc[0])]
        for _, group in sorted(sentences.items())
    ]


def grid_search_lambdas(fwd, rev, lm, sources, refs, cfg: DecodeConfig,
                        sf_grid, ncr_grid, threads: int = 1):
    """Sweep fusion and re-rank weights against references; BLEU per point.

    Returns a list of (lambda_sf, lambda_ncr, bleu_score) tuples in grid
    order. refs are eos-free token id sequences.
    """
    refs = [list(r) for r in refs]
    results = []
    eos = _as_scorer(fwd).eos_id
    for lam_sf in sf_grid:
        decode_cfg = replace(cfg, fusion_lambda=lam_sf)
        cands_per_sentence = decode_batch(fwd, lm, sources, decode_cfg, threads=threads)
        for lam_ncr in ncr_grid:
            winners = []
            for source, cands in zip(sources, cands_per_sentence):
                ranked = noisy_channel_rerank(
                    cands, rev, lm, NoisyChannelConfig(lam_ncr), source
                )
                body = list(ranked[0].tokens)
                if body and body[-1] == eos:
                    body = body[:-1]
                winners.append(body)
            results.append((lam_sf, lam_ncr, corpus_bleu(winners, refs).score))
    return results
