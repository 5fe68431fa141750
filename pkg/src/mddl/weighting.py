"""Per-query block-diagonal weighting from class-wise correlations.

For a query ``b`` the weighting matrix M collapses each class's ``s`` atoms
into a single column: block k is the softmax of the correlations between b
and the atoms of class k, so every block is nonnegative and sums to one.
M is block diagonal by construction and is never materialized; blocks are
kept as an (n, s) array and the product ``A_M @ M`` is formed class by
class in O(d n s).
"""

from dataclasses import dataclass

import numpy as np

from .dictionary import check_query


@dataclass(frozen=True)
class CorrelationProfile:
    """Inner products of each atom with a query, shaped (n, s)."""

    per_class: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.per_class, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"per_class must be 2-D (n, s), got shape {arr.shape}")
        object.__setattr__(self, "per_class", arr)

    @property
    def n(self):
        return self.per_class.shape[0]

    @property
    def s(self):
        return self.per_class.shape[1]


BLOCK_SUM_ATOL = 1e-9


@dataclass(frozen=True)
class WeightingMatrix:
    """Block-diagonal weights stored as one length-s block per class.

    Logically this is the (n*s, n) matrix whose column k holds block k in
    rows [k*s, (k+1)*s) and zeros elsewhere; `dense` materializes that form
    for tests and debugging only.
    """

    blocks: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.blocks, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"blocks must be 2-D (n, s), got shape {arr.shape}")
        if np.any(arr < 0.0) or np.any(arr > 1.0):
            raise ValueError("block entries must lie in [0, 1]")
        sums = arr.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > BLOCK_SUM_ATOL):
            bad = int(np.argmax(np.abs(sums - 1.0)))
            raise ValueError(f"block {bad} sums to {sums[bad]!r}, expected 1")
        object.__setattr__(self, "blocks", arr)
        arr.setflags(write=False)

    @property
    def n(self):
        return self.blocks.shape[0]

    @property
    def s(self):
        return self.blocks.shape[1]

    def dense(self):
        """Materialize the (n*s, n) block-diagonal matrix."""
        n, s = self.blocks.shape
        out = np.zeros((n * s, n))
        for k in range(n):
            out[k * s:(k + 1) * s, k] = self.blocks[k]
        return out


def correlations(dic, q):
    """Class-wise correlations ``A_k^T b`` for every class, as (n, s)."""
    q = check_query(dic, q)
    return CorrelationProfile(per_class=(dic.data.T @ q).reshape(dic.n, dic.s))


def softmax_block(c):
    """Numerically stable softmax of one correlation block.

    Uses max subtraction, so arbitrarily large inputs cannot overflow; the
    output has entries in (0, 1] and sums to one.
    """
    c = np.asarray(c, dtype=np.float64)
    if c.ndim != 1 or c.shape[0] < 1:
        raise ValueError(f"expected a nonempty 1-D block, got shape {c.shape}")
    if not np.isfinite(c).all():
        raise ValueError("softmax input must be finite")
    e = np.exp(c - c.max())
    return e / e.sum()


def build_weighting(dic, q):
    """Construct the per-query weighting: block k = softmax of block k of
    the correlation profile."""
    prof = correlations(dic, q).per_class
    if not np.isfinite(prof).all():
        raise ValueError("correlations are not finite; check query and dictionary")
    shifted = prof - prof.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return WeightingMatrix(blocks=e / e.sum(axis=1, keepdims=True))


def weighted_dictionary(dic, m):
    """The d-by-n product ``A_M @ M`` formed blockwise in O(d n s).

    Column k is the convex combination of class k's atoms under block k;
    the dense (n*s, n) weighting matrix is never built.
    """
    if (m.n, m.s) != (dic.n, dic.s):
        raise ValueError(
            f"weighting shape (n={m.n}, s={m.s}) does not match dictionary "
            f"(n={dic.n}, s={dic.s})"
        )
    cube = dic.data.reshape(dic.d, dic.n, dic.s)
    return np.einsum("dks,ks->dk", cube, m.blocks)
