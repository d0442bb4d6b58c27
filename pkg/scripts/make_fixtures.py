#!/usr/bin/env python
"""Generate a small deterministic dataset for exercising the full pipeline.

Produces, under a destination directory:

    facts/<lang>.jsonl      3 languages x 12 parallel facts, four of which
                            carry engineered cross-language (subject, object)
                            collisions: fact 0 collides eng/fra, fact 2 in
                            all three languages, fact 4 eng/zho, fact 6
                            fra/zho. Each language therefore keeps 9 facts
                            after duplicate exclusion.
    corpus/shard-*.jsonl(.gz)  4 shards of synthetic documents embedding the
                            subject/object strings with planned counts
    predictions.jsonl       generations per (fact, lang, step)
    embeddings/             float32 tensors + sidecars for fra and eng
    config.json             pipeline configuration pointing at the above

Everything is a pure function of the seed, so rebuilding with the same seed
reproduces identical files.
"""

from __future__ import annotations

import argparse
import gzip
import json
import random
import sys
from pathlib import Path

import numpy as np

LANGS = ("eng_Latn", "fra_Latn", "zho_Hans")
STEPS = (1000, 5000, 10000)

# fact_id -> relation, then per language (subject, object)
FACTS = {
    0: ("capital_of", ("France", "Paris"), ("France", "Paris"), ("法国", "巴黎")),
    1: ("capital_of", ("Germany", "Berlin"), ("Allemagne", "Berlin"), ("德国", "柏林")),
    2: ("manufacturer", ("iPhone", "Apple"), ("iPhone", "Apple"), ("iPhone", "Apple")),
    3: ("capital_of", ("Spain", "Madrid"), ("Espagne", "Madrid"), ("西班牙", "马德里")),
    4: ("manufacturer", ("Walkman", "Sony"), ("Baladeur", "Sony"), ("Walkman", "Sony")),
    5: ("capital_of", ("Japan", "Tokyo"), ("Japon", "Tokyo"), ("日本", "东京")),
    6: ("manufacturer", ("Corolla car", "Toyota"), ("Corolla", "Toyota"), ("Corolla", "Toyota")),
    7: ("native_language", ("Moliere", "French"), ("Moliere", "francais"), ("莫里哀", "法语")),
    8: ("native_language", ("Goethe", "German"), ("Goethe", "allemand"), ("歌德", "德语")),
    9: ("capital_of", ("Italy", "Rome"), ("Italie", "Rome"), ("意大利", "罗马")),
    10: ("native_language", ("Cervantes", "Spanish"), ("Cervantes", "espagnol"), ("塞万提斯", "西班牙语")),
    11: ("manufacturer", ("PlayStation", "Sony"), ("Console PlayStation", "Sony"), ("PS游戏机", "索尼")),
}

# ids removed per language by duplicate exclusion (for test cross-checks)
EXPECTED_REMOVED = {
    "eng_Latn": {0, 2, 4},
    "fra_Latn": {0, 2, 6},
    "zho_Hans": {2, 4, 6},
}

# documents embedding each (lang, fact) pair, keyed by the first language
# owning the pair; languages sharing a pair inherit its aggregated count.
# Cross-pair substrings add more: eng fact 6 docs ("Corolla car") also feed
# the fra/zho "Corolla" pair, and fra fact 11 docs ("Console PlayStation")
# feed the eng "PlayStation" pair.
DOC_PLAN = {
    "eng_Latn": {0: 30, 1: 25, 2: 20, 3: 18, 4: 12, 5: 10, 6: 8, 7: 2, 8: 3, 9: 15, 10: 1, 11: 6},
    "fra_Latn": {1: 12, 3: 9, 4: 1, 5: 15, 6: 5, 7: 0, 8: 2, 9: 11, 10: 1, 11: 2},
    "zho_Hans": {0: 6, 1: 5, 3: 5, 5: 6, 7: 2, 8: 2, 9: 5, 10: 0, 11: 3},
}

# facts answered correctly at the final checkpoint; earlier checkpoints
# recall progressively smaller subsets. Each language carries a couple of
# low-frequency facts that are nonetheless correct (e.g. fra 7 and 10), so
# the fitted threshold leaves nonempty false-negative and true-negative
# partitions.
CORRECT_AT_FINAL = {
    "eng_Latn": {0, 1, 2, 3, 4, 5, 9, 10, 11},
    "fra_Latn": {0, 1, 3, 5, 7, 9, 10},
    "zho_Hans": {0, 1, 3, 5, 7, 9},
}
CORRECT_AT_MID = {
    "eng_Latn": {0, 1, 2, 3, 5, 9},
    "fra_Latn": {0, 1, 3, 9},
    "zho_Hans": {0, 1, 5},
}
CORRECT_AT_EARLY = {
    "eng_Latn": {0, 1},
    "fra_Latn": {0},
    "zho_Hans": set(),
}
CORRECT_BY_STEP = {1000: CORRECT_AT_EARLY, 5000: CORRECT_AT_MID, 10000: CORRECT_AT_FINAL}

PROMPTS = {
    "capital_of": {
        "eng_Latn": "What is the capital of {s}? The answer is:",
        "fra_Latn": "Quelle est la capitale de {s} ? La reponse est :",
        "zho_Hans": "{s}的首都是哪里？答案是：",
    },
    "manufacturer": {
        "eng_Latn": "Which company manufactures {s}? The answer is:",
        "fra_Latn": "Quelle entreprise fabrique {s} ? La reponse est :",
        "zho_Hans": "{s}是哪家公司制造的？答案是：",
    },
    "native_language": {
        "eng_Latn": "What was the native language of {s}? The answer is:",
        "fra_Latn": "Quelle etait la langue maternelle de {s} ? La reponse est :",
        "zho_Hans": "{s}的母语是什么？答案是：",
    },
}

FILLER = (
    "archive notes mention",
    "the almanac records that",
    "据记载",
    "observers wrote of",
    "the bulletin covered",
)


def write_facts(dest: Path) -> None:
    facts_dir = dest / "facts"
    facts_dir.mkdir(parents=True, exist_ok=True)
    for li, lang in enumerate(LANGS):
        lines = []
        for fid in sorted(FACTS):
            relation, *pairs = FACTS[fid]
            subject, obj = pairs[li]
            prompt = PROMPTS[relation][lang].format(s=subject)
            lines.append(
                json.dumps(
                    {
                        "fact_id": fid,
                        "relation": relation,
                        "subject": subject,
                        "object": obj,
                        "prompt": prompt,
                    },
                    ensure_ascii=False,
                )
            )
        (facts_dir / f"{lang}.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_corpus(dest: Path, seed: int) -> None:
    corpus_dir = dest / "corpus"
    corpus_dir.mkdir(parents=True, exist_ok=True)
    rnd = random.Random(seed)

    docs = []
    seen_pairs = set()
    for li, lang in enumerate(LANGS):
        for fid, n_docs in DOC_PLAN[lang].items():
            _, *pairs = FACTS[fid]
            subject, obj = pairs[li]
            if (subject, obj) in seen_pairs:
                continue  # shared pairs are emitted once; counts aggregate
            seen_pairs.add((subject, obj))
            for d in range(n_docs):
                filler_a = rnd.choice(FILLER)
                filler_b = rnd.choice(FILLER)
                docs.append(f"{filler_a} {subject} {filler_b} {obj} .")
    # near-miss documents: one string of a pair without the other
    for li, lang in enumerate(LANGS):
        for fid in (0, 5, 9):
            _, *pairs = FACTS[fid]
            subject, obj = pairs[li]
            docs.append(f"{rnd.choice(FILLER)} {subject} appears alone here .")
            docs.append(f"{rnd.choice(FILLER)} nothing but {obj} in this text .")
    # plain noise
    for i in range(40):
        docs.append(f"{rnd.choice(FILLER)} unrelated chatter number {i} .")

    rnd.shuffle(docs)
    shard_count = 4
    for shard_idx in range(shard_count):
        chunk = docs[shard_idx::shard_count]
        lines = [
            json.dumps({"doc_id": f"s{shard_idx}-d{i}", "text": text}, ensure_ascii=False)
            for i, text in enumerate(chunk)
        ]
        payload = "\n".join(lines) + "\n"
        if shard_idx == shard_count - 1:
            with gzip.open(corpus_dir / f"shard-{shard_idx}.jsonl.gz", "wt", encoding="utf-8") as fh:
                fh.write(payload)
        else:
            (corpus_dir / f"shard-{shard_idx}.jsonl").write_text(payload, encoding="utf-8")


def write_predictions(dest: Path) -> None:
    lines = []
    for lang_idx, lang in enumerate(LANGS):
        for step in STEPS:
            correct = CORRECT_BY_STEP[step][lang]
            for fid in sorted(FACTS):
                _, *pairs = FACTS[fid]
                _, obj = pairs[lang_idx]
                if fid in correct:
                    generation = f"The answer is {obj}."
                else:
                    generation = "The answer is unknown."
                lines.append(
                    json.dumps(
                        {"fact_id": fid, "lang": lang, "step": step, "generation": generation},
                        ensure_ascii=False,
                    )
                )
    (dest / "predictions.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_embeddings(dest: Path, seed: int) -> None:
    emb_dir = dest / "embeddings"
    emb_dir.mkdir(parents=True, exist_ok=True)
    layers, dim = 3, 8
    fact_ids = sorted(FACTS)
    rng = np.random.default_rng(seed)
    base = rng.normal(size=(layers, len(fact_ids), dim))
    for lang in ("eng_Latn", "fra_Latn"):
        for step_idx, step in enumerate(STEPS):
            if lang == "eng_Latn":
                tensor = base + 0.01 * step_idx
            else:
                # drift toward the reference as training progresses
                noise = rng.normal(size=base.shape)
                mix = 0.3 + 0.25 * step_idx
                tensor = mix * base + (1.0 - mix) * noise
            flat = np.ascontiguousarray(tensor, dtype="<f4")
            (emb_dir / f"{lang}_{step}.f32").write_bytes(flat.tobytes())
            sidecar = {
                "lang": lang,
                "step": step,
                "layers": layers,
                "prompts": len(fact_ids),
                "dim": dim,
                "dtype": "<f4",
                "layout": "layer,prompt,dim",
                "data": f"{lang}_{step}.f32",
                "fact_id_order": fact_ids,
            }
            (emb_dir / f"{lang}_{step}.json").write_text(
                json.dumps(sidecar, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
                encoding="utf-8",
            )


def write_config(dest: Path, seed: int) -> None:
    config = {
        "facts_dir": str(dest / "facts"),
        "corpus_shards": str(dest / "corpus" / "shard-*.jsonl*"),
        "predictions": str(dest / "predictions.jsonl"),
        "embeddings_dir": str(dest / "embeddings"),
        "ref_lang": "eng_Latn",
        "steps": list(STEPS),
        "seed": seed,
        "bootstrap_runs": 200,
        "bootstrap_fraction": 0.9,
        "bins": 6,
    }
    (dest / "config.json").write_text(
        json.dumps(config, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )


def build(dest, seed: int = 7) -> Path:
    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    write_facts(dest)
    write_corpus(dest, seed)
    write_predictions(dest)
    write_embeddings(dest, seed)
    write_config(dest, seed)
    return dest


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--dest", required=True, help="directory to create the fixture under")
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args(argv)
    dest = build(args.dest, args.seed)
    print(f"fixture written to {dest}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
