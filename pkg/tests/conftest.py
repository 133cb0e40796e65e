import numpy as np
import pytest

from facexpr.landmarks import LandmarkFrame
from facexpr.topology import FaceRegion, GroupingMode, builtin_subset, custom_subset, enumerate_pairs


@pytest.fixture(scope="session")
def p61_au():
    return enumerate_pairs(builtin_subset("P61"), GroupingMode.AU_GROUPED)


@pytest.fixture(scope="session")
def p61_full():
    return enumerate_pairs(builtin_subset("P61"), GroupingMode.FULL)


def make_frame(points, seq_id="s", frame_idx=0, t_ms=0, img_w=640, img_h=480):
    return LandmarkFrame(
        seq_id=seq_id,
        frame_idx=frame_idx,
        t_ms=t_ms,
        points=np.asarray(points, dtype=np.float64),
        img_w=img_w,
        img_h=img_h,
    )


def tiny_topology(n_points=3, mode=GroupingMode.FULL):
    """A small custom topology over the first n mesh indices."""
    subset = custom_subset(
        list(range(n_points)), {i: FaceRegion.NOSE for i in range(n_points)}
    )
    return enumerate_pairs(subset, mode)


def random_mesh_frames(rng, count, n_points=478, spread=100.0, frame0_idx=0):
    frames = []
    for i in range(count):
        pts = rng.uniform(100.0, 100.0 + spread, size=(n_points, 2))
        frames.append(make_frame(pts, frame_idx=frame0_idx + i, t_ms=400 * i))
    return frames
