"""Prediction judging, per-language accuracy, and crosslingual consistency.

A generation counts as correct when the expected object string is contained
in the model's complete generation (NFC, case-sensitive). Consistency between
two languages at a checkpoint is the Jaccard overlap of their correctly
recalled fact_id sets; an empty union makes the value undefined (None), never
zero.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import (
    DuplicatePrediction,
    EmptyDataset,
    EmptySubset,
    GroupTooSmall,
    MissingPrediction,
    UnknownId,
    UnknownKey,
    UnknownRelation,
)
from .facts import MultilingualFactSet
from .normalize import nfc


@dataclass(frozen=True)
class PredictionRecord:
    fact_id: int
    lang: str
    step: int
    generation: str


def load_predictions(path) -> list[PredictionRecord]:
    """Read JSONL records {fact_id, lang, step, generation}."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            raw = json.loads(line)
            records.append(
                PredictionRecord(
                    fact_id=int(raw["fact_id"]),
                    lang=str(raw["lang"]),
                    step=int(raw["step"]),
                    generation=str(raw["generation"]),
                )
            )
    return records


def judge_correct(generation: str, expected_object: str) -> bool:
    """True iff the normalized expected object occurs in the normalized
    complete generation. First-token heuristics are deliberately avoided:
    two different answers can share a first token."""
    if not expected_object:
        raise ValueError("expected_object must be non-empty")
    return nfc(expected_object) in nfc(generation)


@dataclass(frozen=True)
class CorrectnessMatrix:
    """Bit vectors over a fixed fact_id universe, keyed by (lang, step)."""

    fact_ids: tuple[int, ...]
    langs: tuple[str, ...]
    steps: tuple[int, ...]
    bits: dict[tuple[str, int], np.ndarray]
    missing_as_incorrect: int = 0

    def vector(self, lang: str, step: int) -> np.ndarray:
        key = (lang, step)
        if key not in self.bits:
            raise UnknownKey(f"no correctness vector for lang={lang!r} step={step}")
        return self.bits[key]

    def correct_ids(self, lang: str, step: int) -> frozenset[int]:
        vec = self.vector(lang, step)
        return frozenset(fid for fid, bit in zip(self.fact_ids, vec) if bit)

    def index_of(self) -> dict[int, int]:
        return {fid: i for i, fid in enumerate(self.fact_ids)}


def build_correctness(
    records: list[PredictionRecord],
    facts: MultilingualFactSet,
    steps: list[int],
    on_missing: str = "error",
) -> CorrectnessMatrix:
    """Judge every (fact, language, step) cell of the evaluation grid.

    Missing cells are a hard error by default; on_missing="incorrect"
    downgrades them to False and tallies how many were filled that way.
    """
    if on_missing not in ("error", "incorrect"):
        raise ValueError(f"on_missing must be 'error' or 'incorrect', got {on_missing!r}")
    fact_ids = facts.fact_ids()
    if not fact_ids:
        raise EmptyDataset("fact set has no facts to evaluate")
    objects = {lang: {f.fact_id: f.object for f in facts.facts[lang]} for lang in facts.languages}

    generations: dict[tuple[int, str, int], str] = {}
    for r in records:
        key = (r.fact_id, r.lang, r.step)
        if key in generations:
            raise DuplicatePrediction(f"duplicate prediction for {key}")
        generations[key] = r.generation

    missing: list[tuple[int, str, int]] = []
    filled = 0
    bits: dict[tuple[str, int], np.ndarray] = {}
    for lang in facts.languages:
        for step in steps:
            vec = np.zeros(len(fact_ids), dtype=bool)
            for i, fid in enumerate(fact_ids):
                gen = generations.get((fid, lang, step))
                if gen is None:
                    if on_missing == "error":
                        missing.append((fid, lang, step))
                    else:
                        filled += 1
                    continue
                vec[i] = judge_correct(gen, objects[lang][fid])
            bits[(lang, step)] = vec
    if missing:
        preview = ", ".join(map(str, missing[:5]))
        raise MissingPrediction(
            f"{len(missing)} grid cells lack predictions (first: {preview})"
        )
    return CorrectnessMatrix(
        fact_ids=fact_ids,
        langs=facts.languages,
        steps=tuple(steps),
        bits=bits,
        missing_as_incorrect=filled,
    )


def accuracy(cm: CorrectnessMatrix, lang: str, step: int) -> float:
    """Fraction of facts answered correctly in one language at one step."""
    vec = cm.vector(lang, step)
    return int(np.count_nonzero(vec)) / len(vec)


def consistency(cm: CorrectnessMatrix, lang_a: str, lang_b: str, step: int) -> float | None:
    """Jaccard overlap of the correct fact sets of two languages.

    None when neither language got anything right (empty union).
    """
    a = cm.vector(lang_a, step)
    b = cm.vector(lang_b, step)
    union = int(np.count_nonzero(a | b))
    if union == 0:
        return None
    inter = int(np.count_nonzero(a & b))
    return inter / union


@dataclass(frozen=True)
class ConsistencyMatrix:
    step: int
    langs: tuple[str, ...]
    values: dict[tuple[str, str], float | None]

    def value(self, lang_a: str, lang_b: str) -> float | None:
        if (lang_a, lang_b) in self.values:
            return self.values[(lang_a, lang_b)]
        if (lang_b, lang_a) in self.values:
            return self.values[(lang_b, lang_a)]
        raise UnknownKey(f"no consistency value for ({lang_a!r}, {lang_b!r})")

    def to_dict(self) -> dict:
        matrix = [
            [self.value(a, b) for b in self.langs]
            for a in self.langs
        ]
        return {"step": self.step, "languages": list(self.langs), "matrix": matrix}


def consistency_matrix(cm: CorrectnessMatrix, step: int) -> ConsistencyMatrix:
    values: dict[tuple[str, str], float | None] = {}
    for a in cm.langs:
        for b in cm.langs:
            if (b, a) in values:
                continue
            values[(a, b)] = consistency(cm, a, b, step)
    return ConsistencyMatrix(step=step, langs=cm.langs, values=values)


def group_consistency_series(
    cm: CorrectnessMatrix,
    groups: dict[str, list[str]],
    steps: list[int],
) -> dict[str, list[float | None]]:
    """Mean pairwise consistency inside each named language group, per step.

    Undefined pairs are skipped; a step where every pair is undefined
    yields None.
    """
    for name, members in groups.items():
        if len(members) < 2:
            raise GroupTooSmall(f"group {name!r} needs at least 2 languages")
        for lang in members:
            if lang not in cm.langs:
                raise UnknownKey(f"group {name!r} references unknown language {lang!r}")
    series: dict[str, list[float | None]] = {}
    for name, members in groups.items():
        per_step: list[float | None] = []
        for step in steps:
            vals = [
                v
                for a, b in combinations(members, 2)
                if (v := consistency(cm, a, b, step)) is not None
            ]
            per_step.append(sum(vals) / len(vals) if vals else None)
        series[name] = per_step
    return series


def per_relation_metrics(
    cm: CorrectnessMatrix,
    facts: MultilingualFactSet,
    ref_lang: str,
    steps: list[int],
    relations: list[str] | None = None,
) -> dict[tuple[str, str, int], tuple[float, float | None]]:
    """Accuracy and consistency-vs-reference restricted to each relation."""
    if ref_lang not in cm.langs:
        raise UnknownKey(f"reference language {ref_lang!r} not evaluated")
    relation_of = {f.fact_id: f.relation for f in facts.facts[facts.languages[0]]}
    all_relations = sorted(set(relation_of.values()))
    if relations is None:
        relations = all_relations
    else:
        for rel in relations:
            if rel not in all_relations:
                raise UnknownRelation(f"relation {rel!r} not in fact set")
    idx_by_relation = {
        rel: np.array([i for i, fid in enumerate(cm.fact_ids) if relation_of.get(fid) == rel])
        for rel in relations
    }
    out: dict[tuple[str, str, int], tuple[float, float | None]] = {}
    for lang in cm.langs:
        for rel in relations:
            idx = idx_by_relation[rel]
            for step in steps:
                sub = cm.vector(lang, step)[idx]
                ref = cm.vector(ref_lang, step)[idx]
                acc = int(np.count_nonzero(sub)) / len(sub)
                union = int(np.count_nonzero(sub | ref))
                co = int(np.count_nonzero(sub & ref)) / union if union else None
                out[(lang, rel, step)] = (acc, co)
    return out


def subset_accuracy_series(
    cm: CorrectnessMatrix,
    fact_subset,
    lang: str,
    steps: list[int],
) -> list[float]:
    """Accuracy over a fixed fact_id subset, one value per step."""
    subset = sorted(set(fact_subset))
    if not subset:
        raise EmptySubset("fact subset is empty")
    pos = cm.index_of()
    try:
        idx = np.array([pos[fid] for fid in subset])
    except KeyError as exc:
        raise UnknownId(f"fact_id {exc.args[0]} not in the evaluated universe") from exc
    return [int(np.count_nonzero(cm.vector(lang, step)[idx])) / len(idx) for step in steps]


def identical_object_recall(
    cm: CorrectnessMatrix,
    facts: MultilingualFactSet,
    flags: dict[str, dict[int, bool]],
    ref_lang: str,
    step: int,
) -> dict[tuple[str, str], tuple[int, int]]:
    """Per (language, relation): of the facts sharing the reference object
    and answered correctly in the reference language, how many the language
    itself recalls. Cells with no eligible facts read (0, 0)."""
    if ref_lang not in cm.langs:
        raise UnknownKey(f"reference language {ref_lang!r} not evaluated")
    relation_of = {f.fact_id: f.relation for f in facts.facts[facts.languages[0]]}
    relations = sorted(set(relation_of.values()))
    ref_correct = cm.correct_ids(ref_lang, step)
    out: dict[tuple[str, str], tuple[int, int]] = {}
    for lang in cm.langs:
        lang_flags = flags.get(lang, {})
        lang_correct = cm.correct_ids(lang, step)
        for rel in relations:
            eligible = [
                fid
                for fid in cm.fact_ids
                if relation_of.get(fid) == rel and lang_flags.get(fid) and fid in ref_correct
            ]
            recalled = sum(1 for fid in eligible if fid in lang_correct)
            out[(lang, rel)] = (recalled, len(eligible))
    return out
