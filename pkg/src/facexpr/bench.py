"""Feature-creation throughput measurement across presets and grouping modes.

Per-frame cost is measured the way the streaming path pays it: compute the
current frame's pair features and difference them against the previous
frame's. Frames are pre-generated and arrays pre-allocated, so the timed
loop does no per-pair Python work; stats are reported in microseconds.
"""

from __future__ import annotations

import json
import platform
import time
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .features import frame_features
from .landmarks import LandmarkFrame
from .synth import canonical_face
from .topology import GroupingMode, builtin_subset, enumerate_pairs

MIN_ITERATIONS = 100


@dataclass
class BenchReport:
    preset: str
    mode: GroupingMode
    pair_count: int
    mean_us: float
    median_us: float
    p99_us: float
    iterations: int
    warmup: int
    host: str

    def to_json_obj(self) -> dict:
        return {
            "preset": self.preset,
            "mode": self.mode.value,
            "pair_count": self.pair_count,
            "mean_us": round(self.mean_us, 2),
            "median_us": round(self.median_us, 2),
            "p99_us": round(self.p99_us, 2),
            "iterations": self.iterations,
            "warmup": self.warmup,
            "host": self.host,
        }


def _random_frames(count: int, seed: int) -> list[LandmarkFrame]:
    template, img_w, img_h = canonical_face()
    rng = np.random.default_rng(seed)
    frames = []
    for i in range(count):
        pts = template + rng.normal(0.0, 2.0, size=template.shape)
        frames.append(
            LandmarkFrame(
                seq_id="bench", frame_idx=i, t_ms=i * 400, points=pts, img_w=img_w, img_h=img_h
            )
        )
    return frames


def bench_feature_creation(
    preset: str,
    mode: GroupingMode | str,
    iterations: int = 300,
    warmup: int = 30,
    seed: int = 0,
) -> BenchReport:
    """Time per-frame feature creation (features + previous-frame diff)."""
    if iterations < MIN_ITERATIONS:
        raise ConfigError(f"iterations must be >= {MIN_ITERATIONS}")
    mode = GroupingMode(mode)
    topo = enumerate_pairs(builtin_subset(preset), mode)
    pool = _random_frames(32, seed)
    prev = frame_features(pool[-1], topo)

    samples_ns = np.empty(iterations)
    for it in range(-warmup, iterations):
        frame = pool[it % len(pool)]
        t0 = time.perf_counter_ns()
        feats = frame_features(frame, topo)
        _ = feats.distances - prev.distances
        _ = feats.angles - prev.angles
        t1 = time.perf_counter_ns()
        prev = feats
        if it >= 0:
            samples_ns[it] = t1 - t0

    us = samples_ns / 1000.0
    return BenchReport(
        preset=topo.subset.preset,
        mode=mode,
        pair_count=topo.pair_count,
        mean_us=float(us.mean()),
        median_us=float(np.median(us)),
        p99_us=float(np.percentile(us, 99)),
        iterations=iterations,
        warmup=warmup,
        host=f"{platform.machine()} {platform.processor()}".strip() or platform.machine(),
    )


def bench_grid(iterations: int = 300, warmup: int = 30, seed: int = 0) -> list[BenchReport]:
    reports = []
    for preset in ("P61", "P122", "P250"):
        for mode in (GroupingMode.FULL, GroupingMode.AU_GROUPED):
            reports.append(bench_feature_creation(preset, mode, iterations, warmup, seed))
    return reports


def grid_markdown(reports: list[BenchReport]) -> str:
    """Markdown table: presets as column groups, Full/AU columns, CPU row."""
    by_key = {(r.preset, r.mode): r for r in reports}
    presets = sorted({r.preset for r in reports}, key=lambda p: int(p[1:]))
    header = "| |" + "|".join(f" {p} Full | {p} AU " for p in presets) + "|"
    sep = "|---" * (2 * len(presets) + 1) + "|"
    cells = []
    for p in presets:
        for mode in (GroupingMode.FULL, GroupingMode.AU_GROUPED):
            r = by_key.get((p, mode))
            cells.append(f" {r.median_us / 1000.0:.2f} " if r else " - ")
    pairs = []
    for p in presets:
        for mode in (GroupingMode.FULL, GroupingMode.AU_GROUPED):
            r = by_key.get((p, mode))
            pairs.append(f" {r.pair_count} " if r else " - ")
    lines = [
        header,
        sep,
        "| median ms |" + "|".join(cells) + "|",
        "| pairs |" + "|".join(pairs) + "|",
    ]
    return "\n".join(lines) + "\n"


def grid_json(reports: list[BenchReport]) -> str:
    return json.dumps([r.to_json_obj() for r in reports], indent=2) + "\n"
