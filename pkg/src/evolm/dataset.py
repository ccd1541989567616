"""Two-class image ingestion, augmentation, and synthetic test data.

Images are decoded to grayscale, area-averaged down to 31x31, zero-padded
by one row and one column to 32x32, and normalized to [0, 1].  The on-disk
layout is ``root/{train,test}/{positive,negative}/*.{png,pgm}``.
"""

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DomainError

log = logging.getLogger(__name__)

RESIZED = 31
PADDED = 32
_CLASS_DIRS = (("positive", 1), ("negative", 0))
_EXTENSIONS = (".png", ".pgm")


@dataclass
class ImageRecord:
    id: str
    pixels: np.ndarray  # (32, 32) in [0, 1]
    label: int  # 1 positive, 0 negative
    origin: str = "raw"  # raw | augmented | synthetic
    source_id: str | None = None


@dataclass
class DatasetSplit:
    train: list
    test: list

    def class_counts(self, which="train"):
        records = self.train if which == "train" else self.test
        counts = {0: 0, 1: 0}
        for rec in records:
            counts[rec.label] += 1
        return counts


def images(records):
    return np.stack([rec.pixels for rec in records])


def labels(records):
    return np.asarray([rec.label for rec in records], dtype=np.int64)


# ---------------------------------------------------------------------------
# resizing and geometric transforms


def _overlap_weights(n_in, n_out):
    # Row i of the result averages input cells by their overlap with the
    # output cell's interval; rows are normalized to sum to 1.
    w = np.zeros((n_out, n_in))
    step = n_in / n_out
    for i in range(n_out):
        lo = i * step
        hi = (i + 1) * step
        j0 = int(math.floor(lo))
        j1 = min(int(math.ceil(hi)), n_in)
        for j in range(j0, j1):
            w[i, j] = min(hi, j + 1) - max(lo, j)
    return w / w.sum(axis=1, keepdims=True)


def area_resize(img, out_h, out_w):
    """Box/area-average resample of a 2-D image."""
    img = np.asarray(img, dtype=np.float64)
    ry = _overlap_weights(img.shape[0], out_h)
    cx = _overlap_weights(img.shape[1], out_w)
    return ry @ img @ cx.T


def pad_to_32(img31):
    out = np.zeros((PADDED, PADDED))
    out[:RESIZED, :RESIZED] = img31
    return out


def _affine_sample(img, angle_deg, dy, dx, scale):
    """Rotate/scale about the center plus translate, bilinear, zero fill."""
    h, w = img.shape
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    th = math.radians(angle_deg)
    cos_t, sin_t = math.cos(th), math.sin(th)
    rows, cols = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    yr = rows - cy - dy
    xr = cols - cx - dx
    sy = (cos_t * yr + sin_t * xr) / scale + cy
    sx = (-sin_t * yr + cos_t * xr) / scale + cx

    y0 = np.floor(sy).astype(np.int64)
    x0 = np.floor(sx).astype(np.int64)
    wy = sy - y0
    wx = sx - x0
    out = np.zeros_like(img)
    for oy, ox, weight in (
        (0, 0, (1 - wy) * (1 - wx)),
        (0, 1, (1 - wy) * wx),
        (1, 0, wy * (1 - wx)),
        (1, 1, wy * wx),
    ):
        yy = y0 + oy
        xx = x0 + ox
        valid = (yy >= 0) & (yy < h) & (xx >= 0) & (xx < w)
        vals = np.zeros_like(img)
        vals[valid] = img[yy[valid], xx[valid]]
        out += weight * vals
    return np.clip(out, 0.0, 1.0)


# ---------------------------------------------------------------------------
# ingestion


def _load_pixels(path):
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"), dtype=np.float64) / 255.0
    return pad_to_32(np.clip(area_resize(arr, RESIZED, RESIZED), 0.0, 1.0))


def load_directory(root):
    """Decode a train/test two-class directory tree into a DatasetSplit."""
    root = Path(root)
    splits = {}
    for split in ("train", "test"):
        records = []
        for cls, label in _CLASS_DIRS:
            d = root / split / cls
            if not d.is_dir():
                raise DomainError(f"missing dataset directory: {d}")
            files = sorted(p for p in d.iterdir() if p.suffix.lower() in _EXTENSIONS)
            loaded = []
            for p in files:
                try:
                    pixels = _load_pixels(p)
                except Exception as exc:
                    log.warning("skipping unreadable image %s: %s", p, exc)
                    continue
                loaded.append(
                    ImageRecord(id=f"{split}/{cls}/{p.name}", pixels=pixels, label=label)
                )
            if not loaded:
                raise DomainError(f"no readable images in {d}")
            records.extend(loaded)
        splits[split] = records
    return DatasetSplit(train=splits["train"], test=splits["test"])


# ---------------------------------------------------------------------------
# augmentation


def augment(records, factor, stream):
    """(factor - 1) jittered copies per source record.

    Random rotation in [-10, 10] degrees, translation up to +/-2 pixels,
    and scaling in [0.95, 1.05], bilinear resampled and clipped to [0, 1].
    """
    if factor < 1:
        raise DomainError(f"augmentation factor must be >= 1, got {factor}")
    out = []
    for rec in records:
        for k in range(int(factor) - 1):
            angle = stream.uniform(-10.0, 10.0)
            dy = stream.uniform(-2.0, 2.0)
            dx = stream.uniform(-2.0, 2.0)
            scale = stream.uniform(0.95, 1.05)
            pixels = _affine_sample(rec.pixels, angle, dy, dx, scale)
            out.append(
                ImageRecord(
                    id=f"{rec.id}#aug{k + 1}",
                    pixels=pixels,
                    label=rec.label,
                    origin="augmented",
                    source_id=rec.id,
                )
            )
    return out


# ---------------------------------------------------------------------------
# synthetic data


def _blob_image(center, sigma, amp, noise):
    rows, cols = np.meshgrid(np.arange(PADDED), np.arange(PADDED), indexing="ij")
    d2 = (rows - center[0]) ** 2 + (cols - center[1]) ** 2
    return np.clip(amp * np.exp(-d2 / (2.0 * sigma**2)) + noise, 0.0, 1.0)


def synthesize(count_per_class, stream, train_fraction=0.7):
    """Deterministic two-class blob dataset: negatives carry a centered
    bright blob, positives a corner blob, both with additive noise."""
    if count_per_class < 10:
        raise DomainError(f"need at least 10 images per class, got {count_per_class}")
    if not 0.0 < train_fraction < 1.0:
        raise DomainError(f"train fraction must lie in (0, 1), got {train_fraction}")
    train, test = [], []
    n_train = int(round(count_per_class * train_fraction))
    for label, tag, base in ((0, "negative", (15.5, 15.5)), (1, "positive", (7.0, 7.0))):
        for k in range(int(count_per_class)):
            center = (
                base[0] + stream.uniform(-2.0, 2.0),
                base[1] + stream.uniform(-2.0, 2.0),
            )
            sigma = stream.uniform(3.0, 5.0)
            amp = stream.uniform(0.7, 1.0)
            noise = stream.uniform(0.0, 0.15, (PADDED, PADDED))
            rec = ImageRecord(
                id=f"synth/{tag}/{k:04d}",
                pixels=_blob_image(center, sigma, amp, noise),
                label=label,
                origin="synthetic",
            )
            (train if k < n_train else test).append(rec)
    return DatasetSplit(train=train, test=test)


def write_dataset_png(split, root):
    """Write records to the loadable directory layout as 8-bit PNGs."""
    root = Path(root)
    for split_name, records in (("train", split.train), ("test", split.test)):
        for rec in records:
            cls = "positive" if rec.label == 1 else "negative"
            d = root / split_name / cls
            d.mkdir(parents=True, exist_ok=True)
            name = rec.id.replace("/", "_") + ".png"
            data = np.round(rec.pixels * 255.0).astype(np.uint8)
            Image.fromarray(data, mode="L").save(d / name)


# ---------------------------------------------------------------------------
# feature CSV interchange


def write_features_csv(path, ids, label_values, features):
    features = np.asarray(features, dtype=np.float64)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "label"] + [f"f{i + 1}" for i in range(features.shape[1])])
        for rid, lab, row in zip(ids, label_values, features):
            writer.writerow([rid, int(lab)] + [repr(float(v)) for v in row])


def read_features_csv(path):
    ids, labs, rows = [], [], []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:2] != ["id", "label"]:
            raise DomainError(f"unexpected features header in {path}: {header[:2]}")
        for row in reader:
            ids.append(row[0])
            labs.append(int(row[1]))
            rows.append([float(v) for v in row[2:]])
    return ids, np.asarray(labs, dtype=np.int64), np.asarray(rows, dtype=np.float64)
