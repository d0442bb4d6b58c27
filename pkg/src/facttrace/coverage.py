"""Per-language corpus coverage from language-specific token pairs.

For each language, pick its most frequent tokens that hardly occur in the
other languages' reference counts, then measure how often each unordered
pair of those tokens co-occurs at the document level in the target corpus.
The spread of those pair counts is a cheap proxy for how well the corpus
covers the language.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .corpus import CooccurrenceQuery, count_cooccurrences
from .errors import InsufficientTokens
from .normalize import nfc


@dataclass(frozen=True)
class TokenProfile:
    """Token counts from a per-language tokenized reference corpus."""

    lang: str
    counts: dict[str, int]


def load_token_profiles(path) -> list[TokenProfile]:
    """Read `lang,token,count` CSV rows into per-language profiles."""
    by_lang: dict[str, dict[str, int]] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            lang = row["lang"].strip()
            token = nfc(row["token"])
            count = int(row["count"])
            if count <= 0:
                raise ValueError(f"token count must be positive: {lang}/{token}")
            by_lang.setdefault(lang, {})[token] = count
    return [TokenProfile(lang=lang, counts=by_lang[lang]) for lang in sorted(by_lang)]


def select_language_specific_tokens(
    profiles: list[TokenProfile],
    k: int = 4,
    dominance: float = 0.9,
) -> dict[str, list[str]]:
    """Top-k tokens per language whose occurrences are concentrated there.

    A token survives for language l when count_l(token) over the summed
    count across all profiles is at least `dominance`. Survivors are ranked
    by count (ties by token string) and the first k win.
    """
    if len(profiles) < 2:
        raise ValueError("need at least 2 token profiles to compare languages")
    total: dict[str, int] = {}
    for profile in profiles:
        for token, count in profile.counts.items():
            total[token] = total.get(token, 0) + count
    selected: dict[str, list[str]] = {}
    for profile in profiles:
        survivors = [
            (count, token)
            for token, count in profile.counts.items()
            if count / total[token] >= dominance
        ]
        survivors.sort(key=lambda pair: (-pair[0], pair[1]))
        if len(survivors) < k:
            raise InsufficientTokens(
                f"{profile.lang}: only {len(survivors)} tokens pass the "
                f"dominance threshold, need {k}"
            )
        selected[profile.lang] = [token for _, token in survivors[:k]]
    return selected


@dataclass(frozen=True)
class PairCoverage:
    """Document co-occurrence counts for each language's token pairs."""

    pairs: dict[str, list[tuple[str, str, int]]]

    def box_stats(self) -> dict[str, dict[str, float]]:
        out = {}
        for lang, rows in self.pairs.items():
            values = np.array([n for _, _, n in rows], dtype=np.float64)
            out[lang] = {
                "min": float(values.min()),
                "q1": float(np.percentile(values, 25)),
                "median": float(np.percentile(values, 50)),
                "q3": float(np.percentile(values, 75)),
                "max": float(values.max()),
            }
        return out


def pair_coverage(
    tokens_per_lang: dict[str, list[str]],
    shards,
    jobs: int = 1,
) -> PairCoverage:
    """Count document co-occurrences for all unordered distinct-token pairs
    of each language's selected tokens: k tokens yield k*(k-1)/2 pairs."""
    queries: list[CooccurrenceQuery] = []
    pair_lists: dict[str, list[tuple[str, str]]] = {}
    for lang in sorted(tokens_per_lang):
        tokens = tokens_per_lang[lang]
        if len(tokens) < 2:
            raise ValueError(f"{lang}: need at least 2 tokens to form pairs")
        if len(set(tokens)) != len(tokens):
            raise ValueError(f"{lang}: token list contains duplicates")
        pair_lists[lang] = list(combinations(tokens, 2))
        for i, (tok_a, tok_b) in enumerate(pair_lists[lang]):
            queries.append(CooccurrenceQuery(query_id=(lang, i), subject=tok_a, object=tok_b))
    table = count_cooccurrences(shards, queries, jobs=jobs)
    pairs = {
        lang: [
            (tok_a, tok_b, table.counts[(lang, i)])
            for i, (tok_a, tok_b) in enumerate(pair_lists[lang])
        ]
        for lang in pair_lists
    }
    return PairCoverage(pairs=pairs)
