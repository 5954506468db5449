"""Decoding relation activations into predictions.

Single-pair bags get a full ranking by activation. Multi-pair bags keep
the top two relations above the threshold and assign each surviving
relation to the entity pair whose embedding difference is nearest to the
relation embedding (TransE-style).
"""

from __future__ import annotations

import numpy as np

from .data import EmbeddingStore


class AssignmentError(ValueError):
    """No candidate pair had embeddings available for assignment."""


def predict_single(a: np.ndarray) -> list[tuple[int, float]]:
    """All relations sorted by score descending, ties by relation id."""
    order = np.argsort(-np.asarray(a), kind="stable")
    return [(int(j), float(a[j])) for j in order]


def predict_multi(a: np.ndarray, threshold: float = 0.7) -> list[tuple[int, float]]:
    """Top-2 relations strictly above the threshold; possibly empty."""
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    ranked = predict_single(a)
    return [(j, s) for j, s in ranked[:2] if s > threshold]


def pair_difference(pair: tuple[str, str], store: EmbeddingStore,
                    direction: str = "e2-e1") -> np.ndarray | None:
    """Entity embedding difference for a pair; None if either is missing."""
    v1 = store.entity_vec(pair[0])
    v2 = store.entity_vec(pair[1])
    if v1 is None or v2 is None:
        return None
    return v2 - v1 if direction == "e2-e1" else v1 - v2


def assign_relation(pairs: list[tuple[str, str]], relation: int,
                    store: EmbeddingStore,
                    direction: str = "e2-e1") -> tuple[str, str]:
    """Pair whose embedding difference is closest (L2) to the relation's.

    Pairs with a missing entity embedding are skipped; ties go to the
    first pair in order.
    """
    if not pairs:
        raise AssignmentError("no candidate pairs")
    rel_vec = store.relation[relation]
    best_pair, best_dist = None, np.inf
    for pair in pairs:
        delta = pair_difference(pair, store, direction)
        if delta is None:
            continue
        dist = float(np.linalg.norm(delta - rel_vec))
        if dist < best_dist:
            best_pair, best_dist = pair, dist
    if best_pair is None:
        raise AssignmentError(
            f"no candidate pair has entity embeddings: {pairs}")
    return best_pair


def assign_all(relations: list[tuple[int, float]],
               pairs: list[tuple[str, str]], store: EmbeddingStore,
               direction: str = "e2-e1") -> list[dict]:
    """Greedy relation -> pair assignment in score order, each pair once."""
    remaining = list(pairs)
    out = []
    for rel, score in relations:
        entry = {"id": rel, "score": score, "pair": None}
        if remaining:
            try:
                pair = assign_relation(remaining, rel, store, direction)
            except AssignmentError:
                pair = None
            if pair is not None:
                remaining.remove(pair)
                entry["pair"] = list(pair)
        out.append(entry)
    return out
