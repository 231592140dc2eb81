"""Deduplicate formula records by canonical form and split them into
disjoint train/test sets with a fixed test size per level.

Exact dedup keys hash the normalized token stream plus the level tag, so
equal formulas at different levels never collide.  An optional near
duplicate pass (MinHash over token 3-grams) is available but off by
default.  Split selection sorts by record_id before seeded sampling, so
membership depends only on the id set and the seed, never on input order.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from .extract import FormulaRecord, SampleLevel
from .lexer import LexError, NormalizeConfig, detokenize, normalize, tokenize


@dataclass
class DedupStats:
    level: SampleLevel
    before: int
    kept: int
    dropped: int
    train: int | None = None
    test: int | None = None

    def validate(self) -> None:
        if self.before != self.kept + self.dropped:
            raise ValueError("before != kept + dropped")
        if self.train is not None and self.test is not None:
            if self.kept != self.train + self.test:
                raise ValueError("kept != train + test")

    def to_json_dict(self) -> dict:
        return {
            "level": self.level.value,
            "before": self.before,
            "kept": self.kept,
            "dropped": self.dropped,
            "train": self.train,
            "test": self.test,
        }


@dataclass(frozen=True)
class SplitConfig:
    test_per_level: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.test_per_level < 0:
            raise ValueError("test_per_level must be >= 0")


class InsufficientSamples(Exception):
    def __init__(self, level: SampleLevel, have: int, need: int):
        super().__init__(
            f"level {level.value!r} has {have} records, needs {need} for the test set"
        )
        self.level = level
        self.have = have
        self.need = need


def canonical_key(rec: FormulaRecord, config: NormalizeConfig | None = None) -> str:
    """128-bit digest (hex) of the record's normalized form and level.

    Raises LexError when the record's latex does not tokenize; callers
    route such records to a quarantine list.
    """
    canon = detokenize(normalize(tokenize(rec.latex), config))
    h = hashlib.blake2b(digest_size=16)
    h.update(rec.level.value.encode("utf-8"))
    h.update(b"\x00")
    h.update(canon.encode("utf-8"))
    return h.hexdigest()


@dataclass
class DedupResult:
    kept: list[FormulaRecord]
    stats: dict[SampleLevel, DedupStats]
    quarantined: list[tuple[FormulaRecord, LexError]] = field(default_factory=list)


@dataclass(frozen=True)
class NearDupConfig:
    """MinHash near-duplicate detection over token 3-grams."""

    threshold: float = 0.9
    num_perm: int = 128
    ngram: int = 3
    band_rows: int = 4


def dedup(
    records: Sequence[FormulaRecord],
    config: NormalizeConfig | None = None,
    near_dup: NearDupConfig | None = None,
) -> DedupResult:
    """Keep the first record per canonical key.

    Records that fail lexing are quarantined and excluded from the stats,
    which satisfy before == kept + dropped per level.
    """
    counts = {level: [0, 0] for level in SampleLevel}  # [before, kept]
    seen: set[str] = set()
    kept: list[FormulaRecord] = []
    quarantined: list[tuple[FormulaRecord, LexError]] = []
    for rec in records:
        try:
            key = canonical_key(rec, config)
        except LexError as exc:
            quarantined.append((rec, exc))
            continue
        counts[rec.level][0] += 1
        if key in seen:
            continue
        seen.add(key)
        counts[rec.level][1] += 1
        kept.append(replace(rec, dedup_key=key))
    if near_dup is not None:
        kept = _drop_near_duplicates(kept, near_dup)
        kept_per_level = {level: 0 for level in SampleLevel}
        for rec in kept:
            kept_per_level[rec.level] += 1
        for level in SampleLevel:
            counts[level][1] = kept_per_level[level]
    stats = {
        level: DedupStats(
            level=level, before=before, kept=kept_n, dropped=before - kept_n
        )
        for level, (before, kept_n) in counts.items()
    }
    for s in stats.values():
        s.validate()
    return DedupResult(kept=kept, stats=stats, quarantined=quarantined)


def _token_shingles(latex: str, ngram: int) -> set[tuple[str, ...]]:
    toks = [f"{t.kind.value}:{t.text}" for t in tokenize(latex).tokens]
    if len(toks) < ngram:
        return {tuple(toks)} if toks else set()
    return {tuple(toks[i : i + ngram]) for i in range(len(toks) - ngram + 1)}


_MASK64 = (1 << 64) - 1


def _minhash_signature(
    shingles: set[tuple[str, ...]], perms: list[tuple[int, int]]
) -> tuple[int, ...]:
    hashes = [
        int.from_bytes(
            hashlib.blake2b("\x1f".join(s).encode("utf-8"), digest_size=8).digest(),
            "big",
        )
        for s in shingles
    ]
    return tuple(min((a * h + b) & _MASK64 for h in hashes) for a, b in perms)


def _drop_near_duplicates(
    records: list[FormulaRecord], cfg: NearDupConfig
) -> list[FormulaRecord]:
    rng = random.Random(0x5EED)
    perms = [
        (rng.randrange(1, _MASK64, 2), rng.randrange(_MASK64))
        for _ in range(cfg.num_perm)
    ]
    shingle_sets = []
    signatures = []
    for rec in records:
        shingles = _token_shingles(rec.latex, cfg.ngram)
        shingle_sets.append(shingles)
        signatures.append(
            _minhash_signature(shingles, perms) if shingles else (0,) * cfg.num_perm
        )
    buckets: dict[tuple, list[int]] = {}
    n_bands = cfg.num_perm // cfg.band_rows
    for idx, sig in enumerate(signatures):
        for band in range(n_bands):
            key = (
                records[idx].level,
                band,
                sig[band * cfg.band_rows : (band + 1) * cfg.band_rows],
            )
            buckets.setdefault(key, []).append(idx)
    dropped: set[int] = set()
    for members in buckets.values():
        if len(members) < 2:
            continue
        for pos, i in enumerate(members):
            if i in dropped:
                continue
            for j in members[pos + 1 :]:
                if j in dropped or not shingle_sets[i] or not shingle_sets[j]:
                    continue
                inter = len(shingle_sets[i] & shingle_sets[j])
                union = len(shingle_sets[i] | shingle_sets[j])
                if union and inter / union >= cfg.threshold:
                    dropped.add(max(i, j))  # first occurrence wins
    return [rec for idx, rec in enumerate(records) if idx not in dropped]


def _level_rng(seed: int, level: SampleLevel) -> random.Random:
    return random.Random(f"{seed}:{level.value}")


def split(
    records: Sequence[FormulaRecord], cfg: SplitConfig
) -> tuple[list[FormulaRecord], list[FormulaRecord]]:
    """Disjoint (train, test) with exactly ``test_per_level`` test records
    per level, selected deterministically from (record_id set, seed)."""
    by_level: dict[SampleLevel, list[str]] = {level: [] for level in SampleLevel}
    for rec in records:
        by_level[rec.level].append(rec.record_id)
    test_ids: set[str] = set()
    if cfg.test_per_level > 0:
        for level in SampleLevel:
            ids = sorted(by_level[level])
            if not ids:
                continue  # absent levels contribute nothing
            if len(ids) < cfg.test_per_level:
                raise InsufficientSamples(level, len(ids), cfg.test_per_level)
            rng = _level_rng(cfg.seed, level)
            test_ids.update(rng.sample(ids, cfg.test_per_level))
    train = [rec for rec in records if rec.record_id not in test_ids]
    test = [rec for rec in records if rec.record_id in test_ids]
    return train, test


def split_manifest(cfg: SplitConfig, test: Iterable[FormulaRecord]) -> dict:
    return {
        "seed": cfg.seed,
        "test_per_level": cfg.test_per_level,
        "test_ids": sorted(rec.record_id for rec in test),
    }


def attach_split_counts(
    stats: dict[SampleLevel, DedupStats],
    train: Sequence[FormulaRecord],
    test: Sequence[FormulaRecord],
) -> dict[SampleLevel, DedupStats]:
    """Fill train/test counts on dedup stats after splitting."""
    for level in SampleLevel:
        stats[level].train = sum(1 for r in train if r.level is level)
        stats[level].test = sum(1 for r in test if r.level is level)
        stats[level].validate()
    return stats
