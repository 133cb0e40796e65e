#!/usr/bin/env python3
"""Regenerate the curated landmark-subset and canonical-layout data files.

The 478-point mesh indices for eyes, eyebrows, lips, irises, and the face
oval follow the standard face-mesh topology; the extended nose/jaw sets and
the P250 padding are this repo's curation (the region assignment of every
index is what the pipeline actually contracts on). The canonical layout is
a synthetic frontal-face geometry used by the corpus generator and docs; it
is not a statistical mean face.

Run from the repo root:  python tools/gen_mesh_data.py
"""

import json
import math
from pathlib import Path

import numpy as np

OUT_DIR = Path(__file__).resolve().parents[1] / "src" / "facexpr" / "data"

MESH_POINTS = 478
IMG_W, IMG_H = 640, 480
CX, CY = 320.0, 240.0

# --- real face-mesh index groups -------------------------------------------

LEFT_EYE_RING = [33, 7, 163, 144, 145, 153, 154, 155, 133, 173, 157, 158, 159, 160, 161, 246]
RIGHT_EYE_RING = [263, 249, 390, 373, 374, 380, 381, 382, 362, 398, 384, 385, 386, 387, 388, 466]
LEFT_IRIS = [473, 474, 475, 476, 477]
RIGHT_IRIS = [468, 469, 470, 471, 472]
LEFT_EYE_OUTER = [25, 110, 24, 23, 22, 26, 112, 243]
RIGHT_EYE_OUTER = [255, 339, 254, 253, 252, 256, 341, 463]
LEFT_EYE_UPPER = [130, 247, 30, 29, 27, 28, 56, 190]
RIGHT_EYE_UPPER = [359, 467, 260, 259, 257, 258, 286, 414]

LEFT_BROW_LOWER = [46, 53, 52, 65, 55]
LEFT_BROW_UPPER = [70, 63, 105, 66, 107]
RIGHT_BROW_LOWER = [276, 283, 282, 295, 285]
RIGHT_BROW_UPPER = [300, 293, 334, 296, 336]
LEFT_BROW_EXTRA = [71, 68, 104]
RIGHT_BROW_EXTRA = [301, 298, 333]

LIPS_OUTER = [61, 146, 91, 181, 84, 17, 314, 405, 321, 375, 291, 409, 270, 269, 267, 0, 37, 39, 40, 185]
LIPS_INNER = [78, 95, 88, 178, 87, 14, 317, 402, 318, 324, 308, 415, 310, 311, 312, 13, 82, 81, 80, 191]
MOUTH_SURROUND = [57, 186, 92, 165, 167, 164, 393, 391, 322, 410, 287, 273, 335, 406, 313, 18, 83, 182, 106, 43]

NOSE_MIDLINE = [168, 6, 197, 195, 5, 4, 1, 19, 94, 2]
NOSE_BASE = [97, 98, 326, 327]
NOSE_ALAE = [48, 64, 278, 294]
NOSE_SIDES = [44, 45, 51, 220, 115, 49, 218, 166, 274, 275, 281, 440, 344, 279, 438, 392]

# ring order: top of forehead, down the right side to the chin, back up the left
FACE_OVAL = [10, 338, 297, 332, 284, 251, 389, 356, 454, 323, 361, 288, 397, 365, 379, 378,
             400, 377, 152, 148, 176, 149, 150, 136, 172, 58, 132, 93, 234, 127, 162, 21,
             54, 103, 67, 109]
JAW_OVAL = [58, 132, 172, 136, 150, 149, 176, 148, 152, 377, 400, 378, 379, 365, 397, 288, 361]
CHIN_MID = [199, 175, 200, 171, 396, 208, 428]
JOWL_LEFT = [135, 169, 170, 140, 138, 214, 210, 211, 212, 202, 204, 194, 201, 32, 147, 187]
JOWL_RIGHT = [364, 394, 395, 369, 367, 434, 430, 431, 432, 422, 424, 418, 421, 262, 376, 411]

# --- preset composition ------------------------------------------------------

P61 = {
    "left_eye": [33, 133, 159, 145, 158, 153, 160, 144],
    "right_eye": [263, 362, 386, 374, 385, 380, 387, 373],
    "left_eyebrow": LEFT_BROW_UPPER,
    "right_eyebrow": RIGHT_BROW_UPPER,
    "nose": [1, 2, 4, 5, 6, 19, 94, 168, 197],
    "mouth": [0, 13, 14, 17, 37, 39, 61, 84, 91, 181, 267, 269, 291, 314, 321, 405],
    "lower_jaw": [136, 150, 149, 176, 148, 152, 377, 400, 378, 379],
}

P122 = {
    "left_eye": LEFT_EYE_RING,
    "right_eye": RIGHT_EYE_RING,
    "left_eyebrow": LEFT_BROW_LOWER + LEFT_BROW_UPPER,
    "right_eyebrow": RIGHT_BROW_LOWER + RIGHT_BROW_UPPER,
    "nose": P61["nose"] + [195, 97, 98, 326, 327, 48, 278, 64, 294],
    "mouth": sorted(set(LIPS_OUTER) | {13, 14, 78, 95, 88, 87, 317, 318, 308, 324, 80, 82}),
    "lower_jaw": JAW_OVAL + [199, 175, 171],
}

P250 = {
    "left_eye": LEFT_EYE_RING + LEFT_IRIS + LEFT_EYE_OUTER + LEFT_EYE_UPPER,
    "right_eye": RIGHT_EYE_RING + RIGHT_IRIS + RIGHT_EYE_OUTER + RIGHT_EYE_UPPER,
    "left_eyebrow": LEFT_BROW_LOWER + LEFT_BROW_UPPER + LEFT_BROW_EXTRA,
    "right_eyebrow": RIGHT_BROW_LOWER + RIGHT_BROW_UPPER + RIGHT_BROW_EXTRA,
    "nose": NOSE_MIDLINE + NOSE_BASE + NOSE_ALAE + NOSE_SIDES,
    "mouth": sorted(set(LIPS_OUTER) | set(LIPS_INNER)) + MOUTH_SURROUND,
    "lower_jaw": JAW_OVAL + CHIN_MID + JOWL_LEFT + JOWL_RIGHT,
}


def _ellipse(center, rx, ry, n, phase=0.0):
    cx, cy = center
    pts = []
    for k in range(n):
        th = phase + 2.0 * math.pi * k / n
        pts.append((cx + rx * math.cos(th), cy + ry * math.sin(th)))
    return pts


def _row(x0, x1, y, n):
    if n == 1:
        return [((x0 + x1) / 2.0, y)]
    return [(x0 + (x1 - x0) * k / (n - 1), y) for k in range(n)]


def _col(x, y0, y1, n):
    return [(x, y0 + (y1 - y0) * k / (n - 1)) for k in range(n)]


def build_canonical():
    """Place every mesh index at a plausible frontal-face position (pixels)."""
    pos = {}

    def put(indices, points):
        assert len(indices) == len(points)
        for i, p in zip(indices, points):
            pos[i] = p

    # face oval, ring order starting at the top midline
    put(FACE_OVAL, _ellipse((0.0, -8.0), 100.0, 125.0, 36, phase=-math.pi / 2))

    for side, (ex, ring, iris, outer, upper) in {
        "L": (-55.0, LEFT_EYE_RING, LEFT_IRIS, LEFT_EYE_OUTER, LEFT_EYE_UPPER),
        "R": (55.0, RIGHT_EYE_RING, RIGHT_IRIS, RIGHT_EYE_OUTER, RIGHT_EYE_UPPER),
    }.items():
        ec = (ex, -35.0)
        put(ring, _ellipse(ec, 22.0, 10.0, 16, phase=math.pi))
        put(iris, [(ex, -35.0)] + _ellipse(ec, 5.0, 5.0, 4))
        put(outer, _ellipse(ec, 30.0, 15.0, 8, phase=math.pi))
        put(upper, _ellipse((ex, -39.0), 38.0, 19.0, 8, phase=math.pi))

    for sign, lower, upper, extra in (
        (-1, LEFT_BROW_LOWER, LEFT_BROW_UPPER, LEFT_BROW_EXTRA),
        (1, RIGHT_BROW_LOWER, RIGHT_BROW_UPPER, RIGHT_BROW_EXTRA),
    ):
        x0, x1 = sign * 85.0, sign * 25.0
        put(lower, _row(x0, x1, -58.0, 5))
        put(upper, _row(x0 + sign * 2.0, x1 - sign * 2.0, -66.0, 5))
        put(extra, _row(x0, x1, -74.0, 3))

    put(NOSE_MIDLINE, _col(0.0, -45.0, 22.0, 10))
    put(NOSE_BASE, [(-8.0, 20.0), (-14.0, 19.0), (8.0, 20.0), (14.0, 19.0)])
    put(NOSE_ALAE, [(-16.0, 14.0), (-19.0, 9.0), (16.0, 14.0), (19.0, 9.0)])
    put(NOSE_SIDES[:8], _col(-11.0, -28.0, 6.0, 8))
    put(NOSE_SIDES[8:], _col(11.0, -28.0, 6.0, 8))

    put(LIPS_OUTER, _ellipse((0.0, 60.0), 38.0, 16.0, 20, phase=math.pi))
    put(LIPS_INNER, _ellipse((0.0, 60.0), 27.0, 8.0, 20, phase=math.pi))
    put(MOUTH_SURROUND, _ellipse((0.0, 60.0), 50.0, 26.0, 20, phase=math.pi))

    put(CHIN_MID, _ellipse((0.0, 96.0), 16.0, 10.0, 7, phase=-math.pi / 2))
    put(JOWL_LEFT, _ellipse((-48.0, 62.0), 28.0, 34.0, 16))
    put(JOWL_RIGHT, _ellipse((48.0, 62.0), 28.0, 34.0, 16))

    # remaining indices: deterministic scatter inside the face, one rng per index
    for i in range(MESH_POINTS):
        if i in pos:
            continue
        rng = np.random.default_rng(900_000 + i)
        r = math.sqrt(rng.uniform(0.04, 1.0))
        th = rng.uniform(0.0, 2.0 * math.pi)
        pos[i] = (88.0 * r * math.cos(th), -8.0 + 110.0 * r * math.sin(th))

    pts = np.zeros((MESH_POINTS, 2))
    for i, (x, y) in pos.items():
        pts[i] = (CX + x, CY + y)
    return pts


def validate(preset, name, expected):
    seen = {}
    for region, idxs in preset.items():
        for i in idxs:
            assert 0 <= i < MESH_POINTS, f"{name}: index {i} out of range"
            assert i not in seen, f"{name}: index {i} in both {seen[i]} and {region}"
            seen[i] = region
    assert len(seen) == expected, f"{name}: {len(seen)} indices, expected {expected}"
    return seen


def main():
    validate(P61, "P61", 61)
    validate(P122, "P122", 122)
    validate(P250, "P250", 250)
    for small, big in ((P61, P122), (P122, P250)):
        small_all = {i for idxs in small.values() for i in idxs}
        big_all = {i for idxs in big.values() for i in idxs}
        assert small_all <= big_all, "presets are meant to be nested"

    OUT_DIR.mkdir(parents=True, exist_ok=True)

    subsets = {}
    for name, preset in (("P61", P61), ("P122", P122), ("P250", P250)):
        indices = sorted(i for idxs in preset.values() for i in idxs)
        region_of = {}
        for region, idxs in preset.items():
            for i in idxs:
                region_of[str(i)] = region
        subsets[name] = {"indices": indices, "region_of": region_of}
    with open(OUT_DIR / "landmark_subsets.json", "w") as fh:
        json.dump(subsets, fh, indent=1, sort_keys=True)
        fh.write("\n")

    pts = build_canonical()
    with open(OUT_DIR / "canonical_face.json", "w") as fh:
        json.dump(
            {
                "img_w": IMG_W,
                "img_h": IMG_H,
                "points": [[round(float(x), 3), round(float(y), 3)] for x, y in pts],
            },
            fh,
        )
        fh.write("\n")
    print(f"wrote {OUT_DIR / 'landmark_subsets.json'}")
    print(f"wrote {OUT_DIR / 'canonical_face.json'}")


if __name__ == "__main__":
    main()
