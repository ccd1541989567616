"""Dense float64 linear algebra and seeded, reproducible random streams.

All matrices are plain 2-D numpy float64 arrays.  Random streams are backed
by the counter-based Philox generator so that a (seed, stream path) pair
yields the same sequence on every platform.
"""

import hashlib
import zlib

import numpy as np

from .errors import DomainError, ShapeError

PINV_RTOL = 1e-12


def _as_matrix(a, name="matrix"):
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2 or m.size == 0:
        raise ShapeError(f"{name} must be a non-empty 2-D array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DomainError(f"{name} contains non-finite entries")
    return m


def pseudoinverse(h, rtol=PINV_RTOL):
    """Moore-Penrose inverse via SVD.

    Singular values below ``rtol * sigma_max`` are treated as zero, which
    keeps the inverse stable for ill-conditioned or rank-deficient input.
    """
    h = _as_matrix(h, "h")
    u, s, vt = np.linalg.svd(h, full_matrices=False)
    cutoff = rtol * s[0]
    keep = s > cutoff
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    return (vt.T * inv) @ u.T


def solve_least_squares(h, t):
    """Minimum-norm least-squares solution q of h @ q ~= t."""
    h = _as_matrix(h, "h")
    t = _as_matrix(t, "t")
    if h.shape[0] != t.shape[0]:
        raise ShapeError(f"row mismatch: h has {h.shape[0]} rows, t has {t.shape[0]}")
    return pseudoinverse(h) @ t


def _label_id(label):
    if isinstance(label, (int, np.integer)):
        return int(label)
    return zlib.crc32(str(label).encode("utf-8"))


class RngStream:
    """Deterministic random stream keyed by (seed, stream path).

    Child streams are derived by spawn keys, so distinct labels give
    statistically independent streams and the same path always reproduces
    the same draws.
    """

    def __init__(self, seed, path=()):
        self.seed = int(seed)
        self.path = tuple(int(p) for p in path)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.path)
        self._gen = np.random.Generator(np.random.Philox(ss))

    @property
    def stream_id(self):
        return self.path[-1] if self.path else 0

    def child(self, label):
        """New independent stream labeled by an int or a string."""
        return RngStream(self.seed, self.path + (_label_id(label),))

    def uniform(self, lo=0.0, hi=1.0, size=None):
        if lo > hi:
            raise DomainError(f"uniform bounds reversed: lo={lo} > hi={hi}")
        return self._gen.uniform(lo, hi, size)

    def integers(self, lo, hi, size=None):
        return self._gen.integers(lo, hi, size=size)

    def permutation(self, n):
        return self._gen.permutation(n)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, path={self.path})"


def uniform(stream, lo, hi, count):
    """Draw ``count`` values in [lo, hi) from the stream."""
    return stream.uniform(lo, hi, int(count))


def derive_seed(seed, label):
    """Stable 63-bit child seed for labeled sub-runs."""
    digest = hashlib.blake2b(
        f"{int(seed)}:{label}".encode("utf-8"), digest_size=8
    ).digest()
    return int.from_bytes(digest, "big") >> 1
