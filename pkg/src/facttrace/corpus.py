"""Document co-occurrence counting over sharded JSONL corpora.

A fact's corpus frequency is the number of documents whose text contains
both its subject string and its object string. Matching is raw substring
containment after NFC normalization, case-sensitive, with no token boundary
rule; a document contributes at most one count per query no matter how often
the strings occur inside it.

Shards are `*.jsonl` or `*.jsonl.gz` files of {"doc_id": ..., "text": ...}
records. Counting a corpus split into k shards and merging the partial
tables equals counting it in one pass, for any k and any scheduling.
"""

from __future__ import annotations

import gzip
import hashlib
import json
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .errors import (
    EmptyQuerySet,
    FingerprintMismatch,
    MalformedRecord,
    QuerySetMismatch,
    ShardReadError,
)
from .fileio import csv_text
from .normalize import nfc

NORMALIZATION = "nfc/case_sensitive/substring"


@dataclass(frozen=True)
class Document:
    doc_id: str
    text: str


@dataclass(frozen=True)
class CooccurrenceQuery:
    """One (subject, object) pair to count, keyed by (language, fact_id)."""

    query_id: tuple[str, int]
    subject: str
    object: str


class PatternAutomaton:
    """Aho-Corasick automaton over the distinct subject/object strings.

    Each distinct pattern gets an integer id; `hits` returns the set of
    pattern ids present in a text, and `satisfied` maps a hit set back to
    the query positions whose subject and object both occurred.
    """

    def __init__(self, queries: list[CooccurrenceQuery]):
        if not queries:
            raise EmptyQuerySet("no co-occurrence queries given")
        seen = set()
        for q in queries:
            if q.query_id in seen:
                raise ValueError(f"duplicate query_id {q.query_id!r}")
            seen.add(q.query_id)

        normalized = [(nfc(q.subject), nfc(q.object)) for q in queries]
        for q, (subj, obj) in zip(queries, normalized):
            if not subj or not obj:
                raise EmptyQuerySet(f"query {q.query_id!r} has an empty pattern")

        self.patterns: tuple[str, ...] = tuple(
            sorted({s for pair in normalized for s in pair})
        )
        index = {p: i for i, p in enumerate(self.patterns)}
        self.queries: tuple[CooccurrenceQuery, ...] = tuple(queries)
        self._subject_pid = [index[s] for s, _ in normalized]
        self._object_pid = [index[o] for _, o in normalized]
        self._queries_by_subject: dict[int, list[int]] = {}
        for q_idx, pid in enumerate(self._subject_pid):
            self._queries_by_subject.setdefault(pid, []).append(q_idx)

        # trie with failure links
        self._goto: list[dict[str, int]] = [{}]
        self._fail: list[int] = [0]
        self._out: list[list[int]] = [[]]
        for pid, pattern in enumerate(self.patterns):
            state = 0
            for ch in pattern:
                nxt = self._goto[state].get(ch)
                if nxt is None:
                    nxt = len(self._goto)
                    self._goto[state][ch] = nxt
                    self._goto.append({})
                    self._fail.append(0)
                    self._out.append([])
                state = nxt
            self._out[state].append(pid)

        queue = deque()
        for state in self._goto[0].values():
            queue.append(state)
        while queue:
            state = queue.popleft()
            for ch, nxt in self._goto[state].items():
                queue.append(nxt)
                f = self._fail[state]
                while f and ch not in self._goto[f]:
                    f = self._fail[f]
                self._fail[nxt] = self._goto[f].get(ch, 0)
                self._out[nxt].extend(self._out[self._fail[nxt]])

    @property
    def pattern_count(self) -> int:
        return len(self.patterns)

    def hits(self, text: str) -> set[int]:
        """Distinct pattern ids occurring in `text` (text must be NFC)."""
        found: set[int] = set()
        state = 0
        for ch in text:
            while state and ch not in self._goto[state]:
                state = self._fail[state]
            state = self._goto[state].get(ch, 0)
            if self._out[state]:
                found.update(self._out[state])
        return found

    def satisfied(self, hit_pids: set[int]) -> list[int]:
        """Query positions whose subject and object patterns both hit."""
        out = []
        for pid in hit_pids:
            for q_idx in self._queries_by_subject.get(pid, ()):
                if self._object_pid[q_idx] in hit_pids:
                    out.append(q_idx)
        return out


def compile_patterns(queries: list[CooccurrenceQuery]) -> PatternAutomaton:
    return PatternAutomaton(queries)


@dataclass(frozen=True)
class FrequencyTable:
    """Per-query document co-occurrence counts with corpus provenance."""

    counts: dict[tuple[str, int], int]
    shards: tuple[str, ...]
    normalization: str
    doc_total: int
    skipped_records: int = 0

    @property
    def fingerprint(self) -> str:
        payload = self.normalization + "\0" + "\0".join(self.shards)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def metadata(self) -> dict:
        return {
            "fingerprint": self.fingerprint,
            "normalization": self.normalization,
            "shards": list(self.shards),
            "doc_total": self.doc_total,
            "skipped_records": self.skipped_records,
            "query_count": len(self.counts),
        }

    def to_csv_text(self, lang: str | None = None) -> str:
        rows = [
            (qid[0], qid[1], n)
            for qid, n in sorted(self.counts.items())
            if lang is None or qid[0] == lang
        ]
        return csv_text(("lang", "fact_id", "frequency"), rows)

    def languages(self) -> tuple[str, ...]:
        return tuple(sorted({qid[0] for qid in self.counts}))


def _iter_shard_records(path: str, on_malformed: str):
    """Yield (doc_text, None) or (None, 1) for a skipped bad record."""
    opener = gzip.open if str(path).endswith(".gz") else open
    try:
        with opener(path, "rt", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    raw = json.loads(line)
                    if not isinstance(raw, dict):
                        raise ValueError("record is not an object")
                    doc_id = raw["doc_id"]
                    text = raw["text"]
                    if not isinstance(doc_id, str) or not isinstance(text, str):
                        raise ValueError("doc_id and text must be strings")
                except (ValueError, KeyError) as exc:
                    if on_malformed == "skip":
                        yield None, 1
                        continue
                    raise MalformedRecord(f"{path} record {line_no}: {exc}") from exc
                yield text, 0
    except OSError as exc:
        raise ShardReadError(f"cannot read shard {path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise ShardReadError(f"cannot decode shard {path}: {exc}") from exc


def _count_shard(path: str, automaton: PatternAutomaton, on_malformed: str):
    counts = [0] * len(automaton.queries)
    docs = 0
    skipped = 0
    for text, bad in _iter_shard_records(path, on_malformed):
        if bad:
            skipped += 1
            continue
        docs += 1
        hit = automaton.hits(nfc(text))
        if hit:
            for q_idx in automaton.satisfied(hit):
                counts[q_idx] += 1
    return counts, docs, skipped


def count_cooccurrences(
    shards,
    queries: list[CooccurrenceQuery],
    on_malformed: str = "error",
    jobs: int = 1,
) -> FrequencyTable:
    """Count, per query, the documents containing both subject and object.

    Every query_id appears in the result, zero counts included. The table is
    identical regardless of shard order or `jobs`; malformed records are a
    hard error unless on_malformed="skip", which tallies them instead.
    """
    if on_malformed not in ("error", "skip"):
        raise ValueError(f"on_malformed must be 'error' or 'skip', got {on_malformed!r}")
    automaton = compile_patterns(queries)
    shard_paths = [str(s) for s in shards]

    totals = [0] * len(queries)
    doc_total = 0
    skipped = 0
    if jobs > 1 and len(shard_paths) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = pool.map(
                _count_shard,
                shard_paths,
                [automaton] * len(shard_paths),
                [on_malformed] * len(shard_paths),
            )
            for counts, docs, skip in results:
                for i, n in enumerate(counts):
                    totals[i] += n
                doc_total += docs
                skipped += skip
    else:
        for path in shard_paths:
            counts, docs, skip = _count_shard(path, automaton, on_malformed)
            for i, n in enumerate(counts):
                totals[i] += n
            doc_total += docs
            skipped += skip

    return FrequencyTable(
        counts={q.query_id: totals[i] for i, q in enumerate(automaton.queries)},
        shards=tuple(sorted(shard_paths)),
        normalization=NORMALIZATION,
        doc_total=doc_total,
        skipped_records=skipped,
    )


def merge_tables(a: FrequencyTable, b: FrequencyTable) -> FrequencyTable:
    """Entry-wise sum of two partial tables over the same query set."""
    if set(a.counts) != set(b.counts):
        raise QuerySetMismatch("tables cover different query_id sets")
    if a.normalization != b.normalization:
        raise FingerprintMismatch(
            f"normalization differs: {a.normalization!r} vs {b.normalization!r}"
        )
    return FrequencyTable(
        counts={qid: a.counts[qid] + b.counts[qid] for qid in a.counts},
        shards=tuple(sorted(a.shards + b.shards)),
        normalization=a.normalization,
        doc_total=a.doc_total + b.doc_total,
        skipped_records=a.skipped_records + b.skipped_records,
    )


def queries_from_factset(ms) -> list[CooccurrenceQuery]:
    """One query per (language, fact): the fact's subject/object pair."""
    out = []
    for lang in ms.languages:
        for f in ms.facts[lang]:
            out.append(CooccurrenceQuery(query_id=(lang, f.fact_id), subject=f.subject, object=f.object))
    return out
