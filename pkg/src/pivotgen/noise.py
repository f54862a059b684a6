"""Drop/insert noise on realizer inputs.

Dropping a source token simulates a stage-1 recall miss; inserting a
token borrowed from another sample's key facts simulates a spurious
prediction. Noise is applied to sources only, freshly per epoch, so the
realizer trains against a moving set of corrupted inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class NoiseConfig:
    p_drop: float = 0.1
    p_insert: float = 0.1
    seed: int = 0
    apply_to: str = "both"  # "parallel", "pseudo", or "both"
    donors: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if not 0.0 <= self.p_drop <= 1.0:
            raise ValueError(f"p_drop must be in [0, 1], got {self.p_drop}")
        if not 0.0 <= self.p_insert <= 1.0:
            raise ValueError(f"p_insert must be in [0, 1], got {self.p_insert}")
        if self.apply_to not in ("parallel", "pseudo", "both"):
            raise ValueError(f"bad apply_to {self.apply_to!r}")

    def applies(self, kind: str) -> bool:
        return self.apply_to in (kind, "both")


def drop_noise(seq: list, p_drop: float, rng: np.random.Generator) -> list:
    """Remove each token independently; never return an empty sequence."""
    if not seq:
        raise ValueError("drop_noise requires a non-empty sequence")
    if p_drop <= 0.0:
        return list(seq)
    dropped = rng.random(len(seq)) < p_drop
    kept = [tok for tok, gone in zip(seq, dropped) if not gone]
    if not kept:
        kept = [seq[int(rng.integers(len(seq)))]]
    return kept


def insert_noise(seq: list, p_insert: float, donors, rng: np.random.Generator) -> list:
    """At each gap (len+1 of them) insert one donor token with p_insert."""
    if p_insert <= 0.0:
        return list(seq)
    if not donors:
        raise ValueError("insert_noise requires a non-empty donor pool")
    out = []
    flags = rng.random(len(seq) + 1) < p_insert
    for gap in range(len(seq) + 1):
        if flags[gap]:
            donor = donors[int(rng.integers(len(donors)))]
            out.append(donor[int(rng.integers(len(donor)))])
        if gap < len(seq):
            out.append(seq[gap])
    return out


def apply_noise(seq: list, config: NoiseConfig, rng: np.random.Generator) -> list:
    noisy = drop_noise(seq, config.p_drop, rng) if config.p_drop > 0 else list(seq)
    if config.p_insert > 0:
        noisy = insert_noise(noisy, config.p_insert, config.donors, rng)
    return noisy


def augment_batch(batch, config: NoiseConfig, rng: np.random.Generator):
    """Noise the source of every (source, target) pair; targets untouched."""
    if config.p_drop == 0.0 and config.p_insert == 0.0:
        return list(batch)
    return [(apply_noise(src, config, rng), tgt) for src, tgt in batch]
