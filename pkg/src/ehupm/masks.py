"""Pattern masks: structural and semantic validity predicates for patterns.

Masks are pure checks applied to candidate patterns.  Only the size upper
bound is anti-monotone, so it is the only mask the miner may prune on; all
other masks are evaluated when a candidate is reported.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .errors import DatasetError, SpecError
from .model import Dataset


@dataclass(frozen=True)
class SizeMask:
    """Constrains the number of items in a pattern to [min_size, max_size]."""

    min_size: int
    max_size: int

    def __post_init__(self):
        if not 1 <= self.min_size <= self.max_size:
            raise SpecError(f"size mask needs 1 <= min <= max, got {self.min_size}..{self.max_size}")


@dataclass(frozen=True)
class CategoryCoverageMask:
    """Requires, for patterns of at least `trigger_size` items, that every
    required category be represented by at least one pattern item.

    Needs the dataset's item-to-category map (itemCategory facts); items
    absent from the map have no categories and never satisfy a requirement."""

    required: frozenset[str]
    trigger_size: int = 1

    def __post_init__(self):
        if not self.required:
            raise SpecError("category coverage mask needs at least one required category")
        if self.trigger_size < 1:
            raise SpecError("category coverage trigger size must be >= 1")


@dataclass(frozen=True)
class ConjunctionMask:
    """All component masks must pass."""

    parts: tuple["Mask", ...]


Mask = Union[SizeMask, CategoryCoverageMask, ConjunctionMask]


def check_mask(pattern, dataset: Dataset, mask: Mask) -> bool:
    """True when the pattern satisfies the mask.  `pattern` is anything with
    an `items` tuple."""
    items = pattern.items
    if isinstance(mask, SizeMask):
        return mask.min_size <= len(items) <= mask.max_size
    if isinstance(mask, CategoryCoverageMask):
        if len(items) < mask.trigger_size:
            return True
        categories = dataset.item_categories
        if not categories:
            raise DatasetError("category coverage mask needs itemCategory facts in the dataset")
        empty: frozenset[str] = frozenset()
        present = set()
        for item in items:
            present |= categories.get(item, empty)
        return mask.required <= present
    if isinstance(mask, ConjunctionMask):
        return all(check_mask(pattern, dataset, part) for part in mask.parts)
    raise SpecError(f"unknown mask {mask!r}")


def size_cap(mask: Mask) -> int | None:
    """The anti-monotone upper bound a mask imposes on pattern size, if any."""
    if isinstance(mask, SizeMask):
        return mask.max_size
    if isinstance(mask, ConjunctionMask):
        caps = [cap for part in mask.parts if (cap := size_cap(part)) is not None]
        return min(caps) if caps else None
    return None


def parse_mask(text: str) -> Mask:
    """Parse the textual mask forms: `size:2..4` and `cover:noun,verb,adj@3`
    (the trigger size after `@` is optional and defaults to 1)."""
    kind, sep, rest = text.partition(":")
    if not sep:
        raise SpecError(f"expected KIND:..., got {text!r}")
    kind = kind.strip().lower()
    if kind == "size":
        low, sep, high = rest.partition("..")
        if not sep or not low.strip().isdigit() or not high.strip().isdigit():
            raise SpecError(f"expected size:MIN..MAX, got {text!r}")
        return SizeMask(int(low), int(high))
    if kind == "cover":
        spec, at, trigger = rest.partition("@")
        required = frozenset(tok.strip() for tok in spec.split(",") if tok.strip())
        if not required:
            raise SpecError(f"expected cover:CAT[,CAT...][@SIZE], got {text!r}")
        if at:
            if not trigger.strip().isdigit():
                raise SpecError(f"coverage trigger size must be an integer, got {text!r}")
            return CategoryCoverageMask(required, int(trigger))
        return CategoryCoverageMask(required)
    raise SpecError(f"unknown mask kind {kind!r}")


def mask_to_text(mask: Mask) -> str:
    if isinstance(mask, SizeMask):
        return f"size:{mask.min_size}..{mask.max_size}"
    if isinstance(mask, CategoryCoverageMask):
        return f"cover:{','.join(sorted(mask.required))}@{mask.trigger_size}"
    if isinstance(mask, ConjunctionMask):
        return "+".join(mask_to_text(part) for part in mask.parts)
    raise SpecError(f"unknown mask {mask!r}")
