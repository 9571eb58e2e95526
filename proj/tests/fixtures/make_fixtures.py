#!/usr/bin/env python3
"""Regenerates the fixture files in this directory.

The tiny pair is written out by hand. The synthetic pair is built from a
seeded RNG; every target instance is derived from a source instance with a
known intent (keep, perturb, shift away, relabel, drop) and the expected
pair counts are re-derived here by an exhaustive greedy pass before writing.
"""

import json
import math
import os
import random

HERE = os.path.dirname(os.path.abspath(__file__))


def shoelace(ring):
    xs, ys = ring[0::2], ring[1::2]
    n = len(xs)
    s = 0.0
    for i in range(n):
        j = (i + 1) % n
        s += xs[i] * ys[j] - xs[j] * ys[i]
    return abs(s) / 2.0


def bbox(rings):
    xs = [v for r in rings for v in r[0::2]]
    ys = [v for r in rings for v in r[1::2]]
    return [min(xs), min(ys), max(xs) - min(xs), max(ys) - min(ys)]


def box_iou(a, b):
    iw = min(a[0] + a[2], b[0] + b[2]) - max(a[0], b[0])
    ih = min(a[1] + a[3], b[1] + b[3]) - max(a[1], b[1])
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (a[2] * a[3] + b[2] * b[3] - inter)


def poly_ann(ann_id, image_id, cat, rings, area=None):
    rings = [[round(v, 2) for v in r] for r in rings]
    return {
        "id": ann_id,
        "image_id": image_id,
        "category_id": cat,
        "segmentation": rings,
        "area": round(sum(shoelace(r) for r in rings), 2) if area is None else area,
        "bbox": [round(v, 2) for v in bbox(rings)],
        "iscrowd": 0,
    }


def rect(x0, y0, x1, y1):
    return [x0, y0, x1, y0, x1, y1, x0, y1]


def rle_rect(h, w, x0, y0, x1, y1):
    """Column-major counts for the pixel block cols x0..x1-1, rows y0..y1-1."""
    flat = []
    for c in range(w):
        for r in range(h):
            flat.append(1 if (x0 <= c < x1 and y0 <= r < y1) else 0)
    counts, cur, run = [], 0, 0
    for v in flat:
        if v == cur:
            run += 1
        else:
            counts.append(run)
            cur, run = v, 1
    counts.append(run)
    return {"counts": counts, "size": [h, w]}


def crowd_ann(ann_id, image_id, cat, h, w, x0, y0, x1, y1):
    return {
        "id": ann_id,
        "image_id": image_id,
        "category_id": cat,
        "segmentation": rle_rect(h, w, x0, y0, x1, y1),
        "area": float((x1 - x0) * (y1 - y0)),
        "bbox": [x0, y0, x1 - x0, y1 - y0],
        "iscrowd": 1,
    }


def dataset(images, categories, anns):
    return {
        "info": {"description": "cocoaudit test fixture"},
        "images": images,
        "categories": categories,
        "annotations": anns,
    }


def write(name, obj):
    with open(os.path.join(HERE, name), "w") as f:
        json.dump(obj, f, indent=1)
        f.write("\n")


def greedy_pairs(src, tgt, threshold, same_category):
    """Reference greedy matching over eligible (single-ring, non-crowd) instances."""
    def eligible(a):
        return not a["iscrowd"] and isinstance(a["segmentation"], list) and len(a["segmentation"]) == 1

    pairs = []
    images = sorted({a["image_id"] for a in src} | {a["image_id"] for a in tgt})
    for img in images:
        s = [a for a in src if a["image_id"] == img and eligible(a)]
        t = [a for a in tgt if a["image_id"] == img and eligible(a)]
        cands = []
        for a in s:
            for b in t:
                if same_category and a["category_id"] != b["category_id"]:
                    continue
                iou = box_iou(a["bbox"], b["bbox"])
                if iou > threshold:
                    cands.append((-iou, a["id"], b["id"]))
        cands.sort()
        used_s, used_t = set(), set()
        for _, sid, tid in cands:
            if sid in used_s or tid in used_t:
                continue
            used_s.add(sid)
            used_t.add(tid)
            pairs.append((sid, tid))
    return pairs


def tiny_pair():
    images = [{"id": i, "width": 64, "height": 64, "file_name": f"img{i}.png"} for i in (1, 2, 3)]
    cats = [
        {"id": 1, "name": "square", "supercategory": "shape"},
        {"id": 2, "name": "blob", "supercategory": "shape"},
    ]
    a = [
        poly_ann(1, 1, 1, [rect(10, 10, 30, 30)]),
        poly_ann(2, 1, 2, [rect(40, 5, 60, 25)]),
        poly_ann(3, 2, 1, [[5, 5, 35, 5, 40, 20, 20, 40, 5, 30]]),
        poly_ann(4, 2, 2, [rect(45, 40, 60, 60)]),
        poly_ann(5, 3, 1, [[10, 50, 50, 50, 30, 10]]),
    ]
    b = [
        poly_ann(101, 1, 1, [rect(10, 10, 30, 29)]),
        poly_ann(102, 1, 2, [rect(48, 5, 63, 25)]),
        poly_ann(103, 2, 1, [[5, 5, 35, 5, 41, 20, 20, 40, 5, 31]]),
        poly_ann(104, 2, 1, [rect(45, 40, 60, 60)]),
        poly_ann(105, 3, 1, [[10, 50, 50, 50, 30, 11]]),
    ]
    assert greedy_pairs(a, b, 0.9, True) == [(1, 101), (3, 103), (5, 105)]
    assert len(greedy_pairs(a, b, 0.9, False)) == 4
    write("tiny_pair_a.json", dataset(images, cats, a))
    write("tiny_pair_b.json", dataset(images, cats, b))

    # Results-format detections against tiny_pair_a as ground truth.
    results = [
        {"image_id": 1, "category_id": 1, "bbox": [10, 10, 20, 19], "score": 0.9},
        {"image_id": 1, "category_id": 2, "bbox": [48, 5, 15, 20], "score": 0.8},
        {"image_id": 2, "category_id": 1, "bbox": [5, 5, 36, 35], "score": 0.7},
        {"image_id": 3, "category_id": 1, "bbox": [0, 0, 20, 20], "score": 0.6},
    ]
    with open(os.path.join(HERE, "tiny_results.json"), "w") as f:
        json.dump(results, f, indent=1)
        f.write("\n")

    write("empty.json", dataset([], [], []))
    with open(os.path.join(HERE, "garbage.json"), "w") as f:
        f.write('{"images": [1, 2,, 3]}\n')


def convex(rng, cx, cy, r):
    n = rng.randint(5, 9)
    # One angle per sector keeps the centre inside, so the ring is simple.
    step = 2 * math.pi / n
    angles = [i * step + rng.uniform(0, 0.8 * step) for i in range(n)]
    ring = []
    for a in angles:
        rr = r * rng.uniform(0.8, 1.0)
        ring += [cx + rr * math.cos(a), cy + rr * math.sin(a)]
    return ring


def jitter(rng, ring, amount):
    return [v + rng.uniform(-amount, amount) for v in ring]


def dent(rng, ring, cx, cy):
    xs, ys = ring[0::2], ring[1::2]
    extreme = {xs.index(min(xs)), xs.index(max(xs)), ys.index(min(ys)), ys.index(max(ys))}
    out = ring[:]
    for i in range(len(xs)):
        if i in extreme:
            continue
        f = rng.uniform(0.35, 0.6)
        out[2 * i] = cx + (xs[i] - cx) * f
        out[2 * i + 1] = cy + (ys[i] - cy) * f
    return out


def synthetic_pair(n_images=50, seed=20240611):
    rng = random.Random(seed)
    cats = [{"id": c, "name": f"class{c}", "supercategory": "synthetic"} for c in range(1, 5)]
    images, src, tgt = [], [], []
    next_src, next_tgt = 1, 100001
    intended_pairs = 0
    intended_any = 0  # extra pairs when categories may differ
    degenerate = 0

    for img_id in range(1, n_images + 1):
        big = img_id % 10 == 0
        w, h = (240, 200) if big else (160, 120)
        images.append({"id": img_id, "width": w, "height": h, "file_name": f"synthetic_{img_id:03d}.png"})

        if big:
            ring = convex(rng, w / 2, h / 2, 70)
            src.append(poly_ann(next_src, img_id, 1, [ring]))
            tgt.append(poly_ann(next_tgt, img_id, 1, [jitter(rng, ring, 1.0)]))
            assert box_iou(src[-1]["bbox"], tgt[-1]["bbox"]) > 0.92
            intended_pairs += 1
            next_src += 1
            next_tgt += 1
            continue

        # 4 x 3 grid of 40 px cells, one object per occupied cell.
        for cell in range(12):
            cx = 20 + 40 * (cell % 4)
            cy = 20 + 40 * (cell // 4)
            roll = rng.random()
            cat = rng.randint(1, 4)
            if roll < 0.10:
                continue
            if roll < 0.14:
                src.append(crowd_ann(next_src, img_id, cat, h, w, cx - 15, cy - 15, cx + 15, cy + 15))
                tgt.append(crowd_ann(next_tgt, img_id, cat, h, w, cx - 15, cy - 15, cx + 15, cy + 15))
                next_src += 1
                next_tgt += 1
                continue
            if roll < 0.18:
                rings = [rect(cx - 14, cy - 14, cx - 2, cy - 2), rect(cx + 2, cy + 2, cx + 14, cy + 14)]
                src.append(poly_ann(next_src, img_id, cat, rings))
                tgt.append(poly_ann(next_tgt, img_id, cat, [r[:] for r in rings]))
                next_src += 1
                next_tgt += 1
                continue

            ring = convex(rng, cx, cy, rng.uniform(7, 17))
            src.append(poly_ann(next_src, img_id, cat, [ring]))
            sid = next_src
            next_src += 1

            if roll < 0.36:
                # Near copy: vertex jitter keeps box IoU well above 0.9.
                for _ in range(100):
                    moved = jitter(rng, ring, 0.8)
                    if box_iou(bbox([ring]), bbox([moved])) > 0.92:
                        break
                else:
                    moved = ring[:]
                tgt.append(poly_ann(next_tgt, img_id, cat, [moved]))
                intended_pairs += 1
            elif roll < 0.50:
                # Dent: pull non-extreme vertices toward the centre. The box
                # is unchanged, the boundary moves by several pixels.
                tgt.append(poly_ann(next_tgt, img_id, cat, [dent(rng, ring, cx, cy)]))
                assert box_iou(src[-1]["bbox"], tgt[-1]["bbox"]) > 0.99, (src[-1], tgt[-1])
                intended_pairs += 1
            elif roll < 0.62:
                tgt.append(poly_ann(next_tgt, img_id, cat, [ring[:]]))
                intended_pairs += 1
            elif roll < 0.72:
                # Shifted far enough to fall below threshold.
                moved = [v + (6 if i % 2 == 0 else 0) for i, v in enumerate(ring)]
                assert box_iou(bbox([ring]), bbox([moved])) < 0.85
                tgt.append(poly_ann(next_tgt, img_id, cat, [moved]))
            elif roll < 0.80:
                other = cat % 4 + 1
                tgt.append(poly_ann(next_tgt, img_id, other, [jitter(rng, ring, 0.3)]))
                assert box_iou(bbox([ring]), tgt[-1]["bbox"]) > 0.9
                intended_any += 1
            elif roll < 0.90:
                continue  # dropped in the target
            else:
                # Target-only extra next to the source shape.
                for _ in range(100):
                    moved = jitter(rng, ring, 0.5)
                    if box_iou(bbox([ring]), bbox([moved])) > 0.92:
                        break
                else:
                    moved = ring[:]
                tgt.append(poly_ann(next_tgt, img_id, cat, [moved]))
                intended_pairs += 1
                next_tgt += 1
                extra = convex(rng, cx + 10, cy + 10, 5)
                tgt.append(poly_ann(next_tgt, img_id, cat, [extra]))
            next_tgt += 1

        # A sliver that covers no pixel centre: matched but degenerate.
        if img_id % 7 == 0:
            sliver = [5.6, 2.0, 5.9, 2.0, 5.9, 14.0, 5.6, 14.0]
            src.append(poly_ann(next_src, img_id, 2, [sliver]))
            tgt.append(poly_ann(next_tgt, img_id, 2, [sliver[:]]))
            next_src += 1
            next_tgt += 1
            intended_pairs += 1
            degenerate += 1

    same = greedy_pairs(src, tgt, 0.9, True)
    anyc = greedy_pairs(src, tgt, 0.9, False)
    assert len(same) == intended_pairs, (len(same), intended_pairs)
    assert len(anyc) == intended_pairs + intended_any, (len(anyc), intended_pairs + intended_any)

    def eligible(a):
        return not a["iscrowd"] and len(a["segmentation"]) == 1

    expected = {
        "images": n_images,
        "source_instances": len(src),
        "target_instances": len(tgt),
        "pairs": len(same),
        "pairs_any_category": len(anyc),
        "unmatched_source": sum(1 for a in src if eligible(a)) - len(same),
        "unmatched_target": sum(1 for a in tgt if eligible(a)) - len(same),
        "ineligible_source": sum(1 for a in src if not eligible(a)),
        "ineligible_target": sum(1 for a in tgt if not eligible(a)),
        "degenerate_pairs": degenerate,
    }
    images_meta = images
    write("synthetic_a.json", dataset(images_meta, cats, src))
    write("synthetic_b.json", dataset(images_meta, cats, tgt))
    write("synthetic_expected.json", expected)
    return expected


if __name__ == "__main__":
    tiny_pair()
    print(synthetic_pair())
