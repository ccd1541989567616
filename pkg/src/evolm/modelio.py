"""JSON serialization helpers for model files.

Model files are self-describing JSON with a format_version field and every
array written with its shape and full-precision decimal values (Python's
repr round-trips float64 exactly).
"""

import hashlib
import json

import numpy as np

FORMAT_VERSION = 1


def array_to_json(a):
    a = np.asarray(a, dtype=np.float64)
    return {"shape": list(a.shape), "data": a.ravel().tolist()}


def array_from_json(d):
    return np.asarray(d["data"], dtype=np.float64).reshape(d["shape"])


def write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1)
        fh.write("\n")


def read_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()
