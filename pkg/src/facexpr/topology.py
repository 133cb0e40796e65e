"""Landmark subsets, FACS grouping categories, and pair enumeration.

The 61/122/250-point subsets are curated index lists into the 478-point
face mesh, shipped in data/landmark_subsets.json together with the region
assignment of every index. Pair enumeration runs either over all C(n, 2)
combinations (Full) or over the deduplicated union of within-category
combinations (AUGrouped), which is always a strict subset on these presets.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources

from .errors import ConfigError, SchemaError

MESH_POINTS = 478


class FaceRegion(str, Enum):
    LEFT_EYE = "left_eye"
    RIGHT_EYE = "right_eye"
    LEFT_EYEBROW = "left_eyebrow"
    RIGHT_EYEBROW = "right_eyebrow"
    NOSE = "nose"
    MOUTH = "mouth"
    LOWER_JAW = "lower_jaw"


class GroupingMode(str, Enum):
    FULL = "full"
    AU_GROUPED = "au"


_EYES = {FaceRegion.LEFT_EYE, FaceRegion.RIGHT_EYE}
_BROWS = {FaceRegion.LEFT_EYEBROW, FaceRegion.RIGHT_EYEBROW}


@dataclass(frozen=True)
class AUCategory:
    """One FACS-derived landmark grouping: regions whose muscle movements
    realize the listed action units."""

    id: str
    regions: frozenset[FaceRegion]
    action_units: frozenset[int]


AU_CATEGORIES = (
    AUCategory("cat1", frozenset(_EYES | _BROWS), frozenset({1, 2, 3, 4, 5})),
    AUCategory("cat2", frozenset(_EYES | {FaceRegion.NOSE}), frozenset({6})),
    AUCategory("cat3", frozenset(_EYES | _BROWS | {FaceRegion.NOSE}), frozenset({7, 9})),
    AUCategory(
        "cat4",
        frozenset({FaceRegion.NOSE, FaceRegion.MOUTH, FaceRegion.LOWER_JAW}),
        frozenset({12, 14, 15, 16, 23, 26}),
    ),
    AUCategory(
        "cat5",
        frozenset(_EYES | {FaceRegion.NOSE, FaceRegion.MOUTH}),
        frozenset({20}),
    ),
)

_CATEGORY_BY_ID = {c.id: c for c in AU_CATEGORIES}

_EMOTION_CATEGORIES = {
    "anger": ("cat1", "cat3", "cat4"),
    "contempt": ("cat4",),
    "disgust": ("cat3", "cat4"),
    "fear": ("cat1", "cat3", "cat4", "cat5"),
    "happiness": ("cat2", "cat4"),
    "sadness": ("cat1", "cat4"),
    "surprise": ("cat1", "cat4"),
}


@dataclass(frozen=True)
class LandmarkSubset:
    """An ordered subset of mesh indices, each assigned to one face region."""

    preset: str
    indices: tuple[int, ...]
    region_of: dict[int, FaceRegion] = field(compare=False)

    def __post_init__(self):
        if len(set(self.indices)) != len(self.indices):
            raise SchemaError(f"subset {self.preset!r} has duplicate indices")
        for i in self.indices:
            if not 0 <= i < MESH_POINTS:
                raise SchemaError(f"subset index {i} outside mesh of {MESH_POINTS} points")
            if i not in self.region_of:
                raise SchemaError(f"subset index {i} has no region assignment")

    def __len__(self) -> int:
        return len(self.indices)

    def region_members(self, region: FaceRegion) -> list[int]:
        """Positions (into self.indices) of the landmarks in one region."""
        return [k for k, i in enumerate(self.indices) if self.region_of[i] == region]


@dataclass(frozen=True)
class PairTopology:
    """Ordered landmark pairs over a subset; the feature-order contract.

    Pairs are positions into subset.indices with i < j, sorted
    lexicographically, so a topology fully determines downstream feature
    column order.
    """

    subset: LandmarkSubset
    mode: GroupingMode
    pairs: tuple[tuple[int, int], ...]

    @property
    def pair_count(self) -> int:
        return len(self.pairs)

    @property
    def feature_count(self) -> int:
        # distances then angles
        return 2 * len(self.pairs)

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(self.subset.preset.encode())
        h.update(self.mode.value.encode())
        h.update(json.dumps(list(self.subset.indices)).encode())
        h.update(json.dumps([list(p) for p in self.pairs]).encode())
        return h.hexdigest()[:16]


_PRESETS = {"P61": 61, "P122": 122, "P250": 250}


def _load_subset_data() -> dict:
    with resources.files("facexpr.data").joinpath("landmark_subsets.json").open() as fh:
        return json.load(fh)


_SUBSET_CACHE: dict[str, LandmarkSubset] = {}


def builtin_subset(preset: str) -> LandmarkSubset:
    """Load one of the shipped P61/P122/P250 subsets."""
    key = preset if preset.startswith("P") else f"P{preset}"
    if key not in _PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(_PRESETS)}")
    if key not in _SUBSET_CACHE:
        data = _load_subset_data()[key]
        subset = LandmarkSubset(
            preset=key,
            indices=tuple(data["indices"]),
            region_of={int(k): FaceRegion(v) for k, v in data["region_of"].items()},
        )
        if len(subset) != _PRESETS[key]:
            raise SchemaError(f"{key} data file holds {len(subset)} indices")
        _SUBSET_CACHE[key] = subset
    return _SUBSET_CACHE[key]


def custom_subset(indices: list[int], region_of: dict[int, FaceRegion]) -> LandmarkSubset:
    return LandmarkSubset(preset="Custom", indices=tuple(indices), region_of=dict(region_of))


def enumerate_pairs(
    subset: LandmarkSubset,
    mode: GroupingMode | str,
    categories: tuple[AUCategory, ...] = AU_CATEGORIES,
) -> PairTopology:
    """Enumerate landmark pairs in Full or AUGrouped mode.

    AUGrouped keeps only pairs whose two landmarks share at least one
    category, i.e. the deduplicated union of within-category combinations.
    """
    mode = GroupingMode(mode)
    n = len(subset)
    if mode is GroupingMode.FULL:
        pairs = tuple(itertools.combinations(range(n), 2))
        return PairTopology(subset=subset, mode=mode, pairs=pairs)

    members: dict[str, list[int]] = {}
    present_regions = {subset.region_of[i] for i in subset.indices}
    for cat in categories:
        missing = cat.regions - present_regions
        if missing:
            names = ", ".join(sorted(r.value for r in missing))
            raise ConfigError(f"subset {subset.preset!r} has no landmarks for region(s): {names}")
        members[cat.id] = [
            k for k, i in enumerate(subset.indices) if subset.region_of[i] in cat.regions
        ]

    pair_set: set[tuple[int, int]] = set()
    for cat in categories:
        pair_set.update(itertools.combinations(members[cat.id], 2))
    return PairTopology(subset=subset, mode=mode, pairs=tuple(sorted(pair_set)))


def categories_for_emotions(emotions: set[str] | list[str]) -> tuple[AUCategory, ...]:
    """Union of the grouping categories required to express the given emotions."""
    if not emotions:
        raise ConfigError("emotion set must be non-empty")
    ids: set[str] = set()
    for emotion in emotions:
        try:
            ids.update(_EMOTION_CATEGORIES[emotion])
        except KeyError:
            raise ConfigError(f"unknown emotion {emotion!r}") from None
    return tuple(c for c in AU_CATEGORIES if c.id in ids)


def full_pair_count(n: int) -> int:
    return n * (n - 1) // 2
