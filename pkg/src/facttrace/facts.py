"""Multilingual parallel fact dataset: loading, validation, and transforms.

A fact set holds one JSONL file per language under a common directory,
`<lang_code>.jsonl`, each line carrying {fact_id, relation, subject, object,
prompt}. Records are index-aligned across languages: the same fact_id refers
to translations of the same query and must carry the same relation label.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import (
    EmptyField,
    IndexMismatch,
    InvalidPrompt,
    MissingLanguageFile,
    RelationMismatch,
    UnknownLanguage,
)
from .fileio import atomic_write_text, write_json
from .normalize import nfc

_FIELDS = ("fact_id", "relation", "subject", "object", "prompt")


@dataclass(frozen=True)
class Fact:
    fact_id: int
    relation: str
    subject: str
    object: str
    prompt: str


@dataclass(frozen=True)
class MultilingualFactSet:
    """Per-language fact lists, ordered by fact_id.

    A freshly loaded set is parallel: every language carries the same
    fact_id set. Removing per-language duplicates (see exclude_identical)
    produces sets whose languages no longer share identical id sets; the
    original fact_id values are retained so indices stay comparable.
    """

    languages: tuple[str, ...]
    facts: dict[str, tuple[Fact, ...]]
    relations: frozenset[str]

    def fact_ids(self, lang: str | None = None) -> tuple[int, ...]:
        if lang is None:
            lang = self.languages[0]
        if lang not in self.facts:
            raise UnknownLanguage(f"language {lang!r} not in fact set")
        return tuple(f.fact_id for f in self.facts[lang])

    def by_id(self, lang: str) -> dict[int, Fact]:
        if lang not in self.facts:
            raise UnknownLanguage(f"language {lang!r} not in fact set")
        return {f.fact_id: f for f in self.facts[lang]}

    def size(self, lang: str) -> int:
        if lang not in self.facts:
            raise UnknownLanguage(f"language {lang!r} not in fact set")
        return len(self.facts[lang])


@dataclass(frozen=True)
class ExclusionReport:
    """Bookkeeping for per-language removal of cross-language duplicates."""

    kept: dict[str, tuple[int, ...]]
    removed: dict[str, int]
    total: dict[str, int]

    def to_dict(self) -> dict:
        return {
            "kept": {lang: list(ids) for lang, ids in self.kept.items()},
            "removed": dict(self.removed),
            "total": dict(self.total),
        }

    def write(self, path) -> None:
        write_json(path, self.to_dict())


def _parse_record(raw: dict, lang: str, line_no: int) -> Fact:
    for field in _FIELDS:
        if field not in raw:
            raise IndexMismatch(f"{lang}.jsonl line {line_no}: missing field {field!r}")
    fact_id = raw["fact_id"]
    if not isinstance(fact_id, int) or fact_id < 0:
        raise IndexMismatch(f"{lang}.jsonl line {line_no}: fact_id must be a non-negative integer")
    relation = nfc(str(raw["relation"])).strip()
    subject = nfc(str(raw["subject"])).strip()
    obj = nfc(str(raw["object"])).strip()
    prompt = nfc(str(raw["prompt"])).strip()
    if not subject:
        raise EmptyField(f"{lang} fact {fact_id}: empty subject")
    if not obj:
        raise EmptyField(f"{lang} fact {fact_id}: empty object")
    if not relation:
        raise EmptyField(f"{lang} fact {fact_id}: empty relation")
    if subject not in prompt:
        raise InvalidPrompt(f"{lang} fact {fact_id}: prompt does not contain the subject")
    return Fact(fact_id=fact_id, relation=relation, subject=subject, object=obj, prompt=prompt)


def load_facts(path, languages: list[str] | None = None) -> MultilingualFactSet:
    """Load and validate per-language JSONL fact files from a directory.

    When `languages` is omitted, every `*.jsonl` file in the directory is
    loaded (sorted by language code). Validation enforces index alignment
    across languages and per-record field constraints.
    """
    directory = Path(path)
    if languages is None:
        languages = sorted(p.stem for p in directory.glob("*.jsonl"))
    if not languages:
        raise MissingLanguageFile(f"no fact files found under {directory}")

    per_lang: dict[str, dict[int, Fact]] = {}
    for lang in languages:
        fpath = directory / f"{lang}.jsonl"
        if not fpath.is_file():
            raise MissingLanguageFile(f"missing fact file {fpath}")
        by_id: dict[int, Fact] = {}
        with open(fpath, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                fact = _parse_record(json.loads(line), lang, line_no)
                if fact.fact_id in by_id:
                    raise IndexMismatch(f"{lang}.jsonl: duplicate fact_id {fact.fact_id}")
                by_id[fact.fact_id] = fact
        per_lang[lang] = by_id

    ref_lang = languages[0]
    ref_ids = set(per_lang[ref_lang])
    for lang in languages[1:]:
        ids = set(per_lang[lang])
        if ids != ref_ids:
            missing = sorted(ref_ids ^ ids)[:5]
            raise IndexMismatch(
                f"fact_id sets differ between {ref_lang} and {lang} (e.g. {missing})"
            )
    for fid in sorted(ref_ids):
        rel = per_lang[ref_lang][fid].relation
        for lang in languages[1:]:
            if per_lang[lang][fid].relation != rel:
                raise RelationMismatch(
                    f"fact {fid}: relation {per_lang[lang][fid].relation!r} in {lang} "
                    f"vs {rel!r} in {ref_lang}"
                )

    facts = {
        lang: tuple(per_lang[lang][fid] for fid in sorted(per_lang[lang]))
        for lang in languages
    }
    relations = frozenset(f.relation for lang_facts in facts.values() for f in lang_facts)
    return MultilingualFactSet(languages=tuple(languages), facts=facts, relations=relations)


def save_facts(ms: MultilingualFactSet, path) -> None:
    """Write one `<lang>.jsonl` per language; inverse of load_facts."""
    directory = Path(path)
    directory.mkdir(parents=True, exist_ok=True)
    for lang in ms.languages:
        lines = []
        for f in ms.facts[lang]:
            lines.append(
                json.dumps(
                    {
                        "fact_id": f.fact_id,
                        "relation": f.relation,
                        "subject": f.subject,
                        "object": f.object,
                        "prompt": f.prompt,
                    },
                    ensure_ascii=False,
                )
            )
        atomic_write_text(directory / f"{lang}.jsonl", "\n".join(lines) + ("\n" if lines else ""))


def exclude_identical(ms: MultilingualFactSet) -> tuple[MultilingualFactSet, ExclusionReport]:
    """Drop, per language, facts whose (subject, object) pair also appears
    verbatim for the same fact_id in another language.

    Removal is independent per language: a fact_id can survive in one
    language and be dropped from another. Applying the transform twice
    yields the same kept sets.
    """
    pairs: dict[str, dict[int, tuple[str, str]]] = {
        lang: {f.fact_id: (f.subject, f.object) for f in ms.facts[lang]}
        for lang in ms.languages
    }
    kept: dict[str, tuple[Fact, ...]] = {}
    kept_ids: dict[str, tuple[int, ...]] = {}
    removed: dict[str, int] = {}
    total: dict[str, int] = {}
    for lang in ms.languages:
        survivors = []
        for fact in ms.facts[lang]:
            pair = pairs[lang][fact.fact_id]
            clash = any(
                other != lang and pairs[other].get(fact.fact_id) == pair
                for other in ms.languages
            )
            if not clash:
                survivors.append(fact)
        kept[lang] = tuple(survivors)
        kept_ids[lang] = tuple(f.fact_id for f in survivors)
        removed[lang] = len(ms.facts[lang]) - len(survivors)
        total[lang] = len(ms.facts[lang])

    reduced = MultilingualFactSet(languages=ms.languages, facts=kept, relations=ms.relations)
    report = ExclusionReport(kept=kept_ids, removed=removed, total=total)
    return reduced, report


def identical_object_flags(ms: MultilingualFactSet, ref_lang: str) -> dict[str, dict[int, bool]]:
    """Per language, flag facts whose object string equals the reference
    language's object for the same fact_id (exact match after NFC)."""
    if ref_lang not in ms.facts:
        raise UnknownLanguage(f"reference language {ref_lang!r} not in fact set")
    ref_objects = {f.fact_id: f.object for f in ms.facts[ref_lang]}
    flags: dict[str, dict[int, bool]] = {}
    for lang in ms.languages:
        flags[lang] = {
            f.fact_id: ref_objects.get(f.fact_id) == f.object for f in ms.facts[lang]
        }
    return flags


def relation_histogram(ms: MultilingualFactSet) -> dict[str, int]:
    """Count distinct fact_ids per relation label.

    On a parallel set the counts sum to the per-language fact count.
    """
    relation_of: dict[int, str] = {}
    for lang in ms.languages:
        for f in ms.facts[lang]:
            relation_of[f.fact_id] = f.relation
    hist: dict[str, int] = {}
    for rel in relation_of.values():
        hist[rel] = hist.get(rel, 0) + 1
    return dict(sorted(hist.items()))
