"""Layer-averaged last-token embedding similarity across checkpoints.

Embeddings live in flat little-endian float32 files of shape
[layer][prompt][dim], row-major, one file per (language, checkpoint), with
a JSON sidecar describing the layout:

    <lang>_<step>.f32    raw tensor, layers * prompts * dim * 4 bytes
    <lang>_<step>.json   {"lang", "step", "layers", "prompts", "dim",
                          "dtype": "<f4", "layout": "layer,prompt,dim",
                          "data": "<lang>_<step>.f32",
                          "fact_id_order": [...]}

Pair similarity between a language and the reference averages the cosine of
same-fact, same-layer vectors over every selected fact and every layer,
weighting all layers equally. Facts whose vectors are zero in any layer are
skipped and tallied rather than aborting a sweep.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatch,
    LayerCountMismatch,
    ManifestError,
    NonFiniteInput,
    StepMismatch,
    UnknownId,
    ZeroVector,
)
from .fileio import atomic_write_bytes, atomic_write_text, dump_json

DTYPE = "<f4"
LAYOUT = "layer,prompt,dim"


@dataclass(frozen=True)
class EmbeddingManifest:
    lang: str
    step: int
    layers: int
    prompts: int
    dim: int
    data_path: Path
    fact_id_order: tuple[int, ...]

    def index_of(self) -> dict[int, int]:
        return {fid: i for i, fid in enumerate(self.fact_id_order)}

    def to_dict(self) -> dict:
        return {
            "lang": self.lang,
            "step": self.step,
            "layers": self.layers,
            "prompts": self.prompts,
            "dim": self.dim,
            "dtype": DTYPE,
            "layout": LAYOUT,
            "data": self.data_path.name,
            "fact_id_order": list(self.fact_id_order),
        }


def write_embeddings(directory, lang: str, step: int, tensor, fact_ids) -> Path:
    """Store a [layers][prompts][dim] tensor plus its sidecar; returns the
    sidecar path."""
    directory = Path(directory)
    tensor = np.ascontiguousarray(np.asarray(tensor), dtype=DTYPE)
    if tensor.ndim != 3:
        raise ManifestError(f"tensor must be 3-d [layer][prompt][dim], got shape {tensor.shape}")
    layers, prompts, dim = tensor.shape
    fact_ids = tuple(int(f) for f in fact_ids)
    if len(fact_ids) != prompts:
        raise ManifestError(f"{len(fact_ids)} fact ids for {prompts} prompt rows")
    if len(set(fact_ids)) != len(fact_ids):
        raise ManifestError("fact_id_order contains duplicates")
    stem = f"{lang}_{step}"
    data_path = directory / f"{stem}.f32"
    atomic_write_bytes(data_path, tensor.tobytes())
    manifest = EmbeddingManifest(
        lang=lang,
        step=step,
        layers=layers,
        prompts=prompts,
        dim=dim,
        data_path=data_path,
        fact_id_order=fact_ids,
    )
    sidecar = directory / f"{stem}.json"
    atomic_write_text(sidecar, dump_json(manifest.to_dict()))
    return sidecar


def load_manifest(sidecar_path) -> EmbeddingManifest:
    """Parse and validate a sidecar; checks dtype, layout, duplicates, and
    that the data file has exactly layers * prompts * dim * 4 bytes."""
    sidecar_path = Path(sidecar_path)
    try:
        raw = json.loads(sidecar_path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ManifestError(f"cannot read manifest {sidecar_path}: {exc}") from exc
    for key in ("lang", "step", "layers", "prompts", "dim", "dtype", "layout", "data", "fact_id_order"):
        if key not in raw:
            raise ManifestError(f"{sidecar_path}: missing key {key!r}")
    if raw["dtype"] != DTYPE:
        raise ManifestError(f"{sidecar_path}: dtype must be {DTYPE!r}, got {raw['dtype']!r}")
    if raw["layout"] != LAYOUT:
        raise ManifestError(f"{sidecar_path}: layout must be {LAYOUT!r}, got {raw['layout']!r}")
    layers = int(raw["layers"])
    prompts = int(raw["prompts"])
    dim = int(raw["dim"])
    if layers < 1 or dim < 1:
        raise ManifestError(f"{sidecar_path}: layers and dim must be >= 1")
    fact_ids = tuple(int(f) for f in raw["fact_id_order"])
    if len(fact_ids) != prompts:
        raise ManifestError(f"{sidecar_path}: {len(fact_ids)} fact ids for {prompts} prompts")
    if len(set(fact_ids)) != len(fact_ids):
        raise ManifestError(f"{sidecar_path}: duplicate fact ids")
    data_path = sidecar_path.parent / raw["data"]
    expected = layers * prompts * dim * 4
    try:
        actual = data_path.stat().st_size
    except OSError as exc:
        raise ManifestError(f"{sidecar_path}: data file missing: {exc}") from exc
    if actual != expected:
        raise ManifestError(
            f"{data_path}: size {actual} bytes, expected {expected} "
            f"({layers}x{prompts}x{dim} float32)"
        )
    return EmbeddingManifest(
        lang=str(raw["lang"]),
        step=int(raw["step"]),
        layers=layers,
        prompts=prompts,
        dim=dim,
        data_path=data_path,
        fact_id_order=fact_ids,
    )


def save_manifest(manifest: EmbeddingManifest, sidecar_path) -> None:
    atomic_write_text(sidecar_path, dump_json(manifest.to_dict()))


def load_tensor(manifest: EmbeddingManifest) -> np.ndarray:
    flat = np.fromfile(manifest.data_path, dtype=DTYPE)
    return flat.reshape(manifest.layers, manifest.prompts, manifest.dim)


def cosine(u, v) -> float:
    """Cosine of two nonzero finite vectors, clamped to [-1, 1]."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.ndim != 1 or v.ndim != 1 or u.shape != v.shape:
        raise DimensionMismatch(f"shapes {u.shape} and {v.shape} are not matching vectors")
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
        raise NonFiniteInput("vectors must be finite")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ZeroVector("cosine undefined for zero vectors")
    value = float(np.dot(u, v) / (nu * nv))
    return max(-1.0, min(1.0, value))


@dataclass(frozen=True)
class PairSimilarity:
    mean: float | None
    pairs: int
    skipped: int


def _group_mean(
    tensor_a: np.ndarray,
    tensor_b: np.ndarray,
    rows: list[tuple[int, int]],
) -> PairSimilarity:
    layers = tensor_a.shape[0]
    total = 0.0
    n_cos = 0
    pairs = 0
    skipped = 0
    for row_a, row_b in rows:
        values = []
        zero = False
        for layer in range(layers):
            u = tensor_a[layer, row_a].astype(np.float64)
            v = tensor_b[layer, row_b].astype(np.float64)
            if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
                raise NonFiniteInput("embedding rows must be finite")
            nu = float(np.linalg.norm(u))
            nv = float(np.linalg.norm(v))
            if nu == 0.0 or nv == 0.0:
                zero = True
                break
            c = float(np.dot(u, v) / (nu * nv))
            values.append(max(-1.0, min(1.0, c)))
        if zero:
            skipped += 1
            continue
        pairs += 1
        for c in values:
            total += c
            n_cos += 1
    mean = total / n_cos if n_cos else None
    return PairSimilarity(mean=mean, pairs=pairs, skipped=skipped)


def mean_pair_similarity(
    manifest: EmbeddingManifest,
    ref_manifest: EmbeddingManifest,
    fact_subset,
) -> PairSimilarity:
    """Mean cosine over the subset's facts and all layers between a language
    and the reference at one checkpoint. Facts with a zero vector in any
    layer are skipped and counted."""
    if manifest.step != ref_manifest.step:
        raise StepMismatch(f"steps differ: {manifest.step} vs {ref_manifest.step}")
    if manifest.layers != ref_manifest.layers:
        raise LayerCountMismatch(
            f"layer counts differ: {manifest.layers} vs {ref_manifest.layers}"
        )
    if manifest.dim != ref_manifest.dim:
        raise DimensionMismatch(f"dims differ: {manifest.dim} vs {ref_manifest.dim}")
    idx_a = manifest.index_of()
    idx_b = ref_manifest.index_of()
    rows = []
    for fid in sorted(set(fact_subset)):
        if fid not in idx_a or fid not in idx_b:
            raise UnknownId(f"fact_id {fid} absent from an embedding manifest")
        rows.append((idx_a[fid], idx_b[fid]))
    return _group_mean(load_tensor(manifest), load_tensor(ref_manifest), rows)


@dataclass(frozen=True)
class SimilaritySeries:
    group: str
    steps: tuple[int, ...]
    mean: tuple[float | None, ...]
    pairs: tuple[int, ...]
    skipped: tuple[int, ...]

    def to_rows(self) -> list[tuple]:
        return [
            (self.group, step, mean, pairs, skipped)
            for step, mean, pairs, skipped in zip(self.steps, self.mean, self.pairs, self.skipped)
        ]


GROUP_LABELS = ("SCLFP", "UWLFP", "all")


def similarity_trajectories(
    manifests_by_step: dict[int, EmbeddingManifest],
    ref_manifests_by_step: dict[int, EmbeddingManifest],
    sclfp_ids,
    uwlfp_ids,
    all_ids,
    identical_object_flags: dict[int, bool],
) -> dict[str, SimilaritySeries]:
    """Per-group similarity series across checkpoints.

    Facts flagged as sharing the reference object string are dropped from
    every group before averaging; a group left empty at a step reads None.
    """
    steps = sorted(manifests_by_step)
    if sorted(ref_manifests_by_step) != steps:
        raise StepMismatch("language and reference manifests cover different steps")
    groups = {
        "SCLFP": sorted(set(sclfp_ids)),
        "UWLFP": sorted(set(uwlfp_ids)),
        "all": sorted(set(all_ids)),
    }
    filtered = {
        name: [fid for fid in ids if not identical_object_flags.get(fid, False)]
        for name, ids in groups.items()
    }
    out: dict[str, SimilaritySeries] = {}
    for name in GROUP_LABELS:
        ids = filtered[name]
        means: list[float | None] = []
        pairs: list[int] = []
        skipped: list[int] = []
        for step in steps:
            if not ids:
                means.append(None)
                pairs.append(0)
                skipped.append(0)
                continue
            result = mean_pair_similarity(
                manifests_by_step[step], ref_manifests_by_step[step], ids
            )
            means.append(result.mean)
            pairs.append(result.pairs)
            skipped.append(result.skipped)
        out[name] = SimilaritySeries(
            group=name,
            steps=tuple(steps),
            mean=tuple(means),
            pairs=tuple(pairs),
            skipped=tuple(skipped),
        )
    return out
