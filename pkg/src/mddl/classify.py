"""Classification decision rule, domain inference and ranking metrics.

The predicted class carries the largest component of the sparse code.  Under
softmax weighting the code has one entry per class and the query's domain is
read off the winning class's weighting block; without weighting the code has
one entry per atom and each class is scored by its largest component, the
winning atom's domain serving as the inferred domain.
"""

from dataclasses import dataclass

import numpy as np

CLASS_AGGREGATES = ("max", "abs_sum")


@dataclass(frozen=True)
class ClassificationResult:
    """Decision for one query.

    ``ranking`` is a permutation of [0, n) by descending score with ties
    broken toward the lower class index; ``class_id == ranking[0]``.
    ``degenerate`` flags an all-zero code (a legitimate solver output for
    large L1 penalties), in which case the prediction is the tie-break.
    """

    class_id: int
    inferred_domain: int
    ranking: tuple
    score_per_class: np.ndarray
    degenerate: bool = False


def classify(x, weighting, n, s, mode, aggregate="max"):
    """Turn a sparse code into a class decision.

    Parameters
    ----------
    x : ndarray
        Code of length n (mode "softmax") or n*s (mode "none").
    weighting : WeightingMatrix or None
        Required in softmax mode for domain inference.
    n, s : int
        Class and domain counts of the originating dictionary.
    mode : str
        The solver's weighting mode, "none" or "softmax".
    aggregate : str
        Per-class score in "none" mode: largest component ("max", default)
        or sum of absolute values ("abs_sum", for ablation runs).
    """
    x = np.asarray(x, dtype=np.float64)
    if not np.isfinite(x).all():
        raise ValueError("sparse code contains non-finite entries")
    if aggregate not in CLASS_AGGREGATES:
        raise ValueError(f"aggregate must be one of {CLASS_AGGREGATES}")
    if mode == "softmax":
        if x.shape != (n,):
            raise ValueError(f"softmax-mode code must have length n={n}, got {x.shape}")
        if weighting is None:
            raise ValueError("softmax mode needs the weighting matrix for domain inference")
        if (weighting.n, weighting.s) != (n, s):
            raise ValueError("weighting shape does not match (n, s)")
        scores = x.copy()
    elif mode == "none":
        if x.shape != (n * s,):
            raise ValueError(f"unweighted code must have length n*s={n * s}, got {x.shape}")
        grid = x.reshape(n, s)
        if aggregate == "max":
            scores = grid.max(axis=1)
        else:
            scores = np.abs(grid).sum(axis=1)
    else:
        raise ValueError(f"unknown mode {mode!r}")

    # stable sort on negated scores: ties resolve to the lowest class index
    ranking = tuple(int(i) for i in np.argsort(-scores, kind="stable"))
    class_id = ranking[0]
    degenerate = not np.any(x)
    if mode == "softmax":
        inferred = int(np.argmax(weighting.blocks[class_id]))
    else:
        inferred = int(np.argmax(x[class_id * s:(class_id + 1) * s]))
    return ClassificationResult(
        class_id=class_id,
        inferred_domain=inferred,
        ranking=ranking,
        score_per_class=scores,
        degenerate=degenerate,
    )


def top_k_recall(results, truth, k):
    """Fraction of samples whose true class appears in the top-k ranking."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if len(results) != len(truth):
        raise ValueError(f"{len(results)} results vs {len(truth)} labels")
    if not results:
        raise ValueError("empty result list")
    hits = sum(1 for r, t in zip(results, truth) if t in r.ranking[:k])
    return hits / len(results)
