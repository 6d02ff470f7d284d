"""Deterministic batch sampling with annotator overlap.

The random source is splitmix64, chosen because it is a documented 64-bit
splittable generator that any implementation language can reproduce
bit-exactly. All shuffles are Fisher-Yates driven by rejection-sampled
bounded draws, so batch assignments are auditable from (dataset order,
seed) alone.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from ..types import Instance, ValidationError, VariantKind

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """splitmix64: state advances by the golden-gamma constant, output is the
    murmur-style finalizer of the new state."""

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def next_below(self, n: int) -> int:
        """Uniform draw in [0, n) by rejection, avoiding modulo bias."""
        if n <= 0:
            raise ValidationError("bound must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            r = self.next_u64()
            if r < limit:
                return r % n

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates, iterating from the last index down."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_below(i + 1)
            items[i], items[j] = items[j], items[i]

    def fork(self) -> "SplitMix64":
        """Child generator seeded from the next output."""
        return SplitMix64(self.next_u64())


@dataclass(frozen=True)
class AnnotationBatch:
    """One annotator's assignment: ordered instance ids plus the shared overlap."""

    batch_id: str
    dataset: str
    variant: VariantKind
    annotator: str
    instance_ids: tuple[str, ...]
    overlap_ids: tuple[str, ...]
    seed: int
    created_at: Optional[str] = None

    def to_json(self) -> dict:
        obj = {
            "batch_id": self.batch_id,
            "dataset": self.dataset,
            "variant": self.variant.value,
            "annotator": self.annotator,
            "instance_ids": list(self.instance_ids),
            "overlap_ids": list(self.overlap_ids),
            "seed": self.seed,
        }
        if self.created_at is not None:
            obj["created_at"] = self.created_at
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "AnnotationBatch":
        return cls(
            batch_id=obj["batch_id"],
            dataset=obj["dataset"],
            variant=VariantKind(obj["variant"]),
            annotator=obj["annotator"],
            instance_ids=tuple(obj["instance_ids"]),
            overlap_ids=tuple(obj["overlap_ids"]),
            seed=int(obj["seed"]),
            created_at=obj.get("created_at"),
        )


def sample_batches(
    dataset: Sequence[Instance],
    variant: VariantKind,
    n_per_annotator: int = 100,
    overlap: int = 50,
    seed: int = 0,
    annotators: tuple[str, str] = ("annotator-a", "annotator-b"),
    dataset_name: str = "dataset",
    created_at: Optional[str] = None,
) -> tuple[AnnotationBatch, AnnotationBatch]:
    """Draw two sibling batches of ``n_per_annotator`` ids sharing exactly
    ``overlap`` ids, deterministically from (dataset order, seed).

    2n - overlap distinct ids are taken from a seeded shuffle of the dataset;
    the first ``overlap`` go to both annotators, the remainder is split evenly.
    Each batch's presentation order is then shuffled independently.
    """
    if not (0 <= overlap <= n_per_annotator):
        raise ValidationError(f"overlap must be in [0, {n_per_annotator}], got {overlap}")
    if n_per_annotator <= 0:
        raise ValidationError("n_per_annotator must be positive")
    needed = 2 * n_per_annotator - overlap
    ids = [inst.id for inst in dataset]
    if len(ids) < needed:
        raise ValidationError(
            f"dataset has {len(ids)} instances but {needed} are needed "
            f"(2x{n_per_annotator} with {overlap} shared)"
        )
    if annotators[0] == annotators[1]:
        raise ValidationError("sibling batches need two distinct annotators")

    rng = SplitMix64(seed)
    pool = list(ids)
    rng.shuffle(pool)
    drawn = pool[:needed]
    shared = drawn[:overlap]
    rest = drawn[overlap:]
    per_annotator = (shared + rest[:n_per_annotator - overlap],
                     shared + rest[n_per_annotator - overlap:])

    batches = []
    for suffix, annotator, assigned in zip("ab", annotators, per_annotator):
        order = list(assigned)
        rng.fork().shuffle(order)
        batches.append(AnnotationBatch(
            batch_id=f"{dataset_name}-{variant.value}-s{seed}-{suffix}",
            dataset=dataset_name,
            variant=variant,
            annotator=annotator,
            instance_ids=tuple(order),
            overlap_ids=tuple(shared),
            seed=seed,
            created_at=created_at,
        ))
    return batches[0], batches[1]
