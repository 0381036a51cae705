"""Ranking evaluation: hit@l curves, trapezoid AUC, per-pair diagnostics.

A test pair counts as a hit at level l when the gold hypernym appears
among the l nearest neighbors of the projected hyponym vector. The
hyponym itself is excluded from the candidate list by default. The AUC
summarizes the hit curve as the area under its l-1 trapezoids.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np

from .clustering import assign_cluster
from .dataset import RelationPair
from .embeddings import EmbeddingTable, nearest_neighbors
from .errors import InputError
from .projection import ProjectionModel

log = logging.getLogger(__name__)

DEFAULT_L_MAX = 10


@dataclass
class PairResult:
    hyponym: str
    gold: str
    cluster: int
    rank: int | None  # 1-based rank in the candidate list, None if absent


@dataclass
class EvalReport:
    hits: list[float]  # hit@1 .. hit@l_max
    auc: float
    l_max: int
    per_pair: list[PairResult]
    n_pairs: int
    skips: int


def auc(hits: list[float]) -> float:
    """Area under the l-1 trapezoids of the hit curve."""
    if len(hits) < 2:
        raise InputError(f"AUC needs at least 2 hit levels, got {len(hits)}")
    return 0.5 * sum(hits[i] + hits[i + 1] for i in range(len(hits) - 1))


def _rank_pair(model: ProjectionModel, table: EmbeddingTable, pair: RelationPair,
               l: int, exclude_self: bool) -> PairResult:
    """Cluster via the gold offset, project, and rank the gold hypernym."""
    x = table.vector(pair.source)
    y = table.vector(pair.target)
    cluster = assign_cluster(model.clusters, y - x)
    query = x @ model.matrices[cluster]
    if float(np.linalg.norm(query)) == 0.0:
        # degenerate projection: cosine undefined, the pair is a miss
        return PairResult(pair.source, pair.target, cluster, None)
    nn = nearest_neighbors(table, query, l, exclude=pair.source if exclude_self else None)
    rank = None
    for pos, (word, _) in enumerate(nn.entries, start=1):
        if word == pair.target:
            rank = pos
            break
    return PairResult(pair.source, pair.target, cluster, rank)


def _usable_pairs(table: EmbeddingTable,
                  pairs: list[RelationPair]) -> tuple[list[RelationPair], int]:
    usable = [p for p in pairs if p.source in table and p.target in table]
    skips = len(pairs) - len(usable)
    if skips:
        log.warning("skipped %d pair(s) with words missing from the vocabulary", skips)
    if not usable:
        raise InputError("no evaluable pairs: every pair has out-of-vocabulary words")
    return usable, skips


def hit_at(model: ProjectionModel, table: EmbeddingTable, pairs: list[RelationPair],
           l: int, exclude_self: bool = True) -> float:
    """Fraction of pairs whose gold hypernym is in the top-l neighbor list."""
    if l < 1:
        raise InputError(f"l must be >= 1, got {l}")
    if not pairs:
        raise InputError("pairs must be nonempty")
    usable, _ = _usable_pairs(table, pairs)
    matches = sum(
        1 for p in usable
        if _rank_pair(model, table, p, l, exclude_self).rank is not None
    )
    return matches / len(usable)


def evaluate(model: ProjectionModel, table: EmbeddingTable, pairs: list[RelationPair],
             l_max: int = DEFAULT_L_MAX, exclude_self: bool = True) -> EvalReport:
    """Full hit@1..l_max curve, AUC, and per-pair ranks in one pass."""
    if l_max < 2:
        raise InputError(f"l_max must be >= 2, got {l_max}")
    if not pairs:
        raise InputError("pairs must be nonempty")
    usable, skips = _usable_pairs(table, pairs)
    per_pair = [_rank_pair(model, table, p, l_max, exclude_self) for p in usable]
    n = len(per_pair)
    hits = [sum(1 for r in per_pair if r.rank is not None and r.rank <= i) / n
            for i in range(1, l_max + 1)]
    return EvalReport(hits, auc(hits), l_max, per_pair, n, skips)


def predict_candidates(model: ProjectionModel, table: EmbeddingTable, word: str,
                       l: int, exclude_self: bool = True) -> list[tuple[str, float]]:
    """Ranked hypernym candidates for a word without a gold pair.

    Without a gold offset no single cluster applies, so the word is
    projected through every cluster matrix and the candidate lists are
    merged, keeping the best score per word.
    """
    if word not in table:
        raise InputError(f"word {word!r} is not in the vocabulary")
    x = table.vector(word)
    best: dict[str, float] = {}
    for c in range(model.k):
        query = x @ model.matrices[c]
        if float(np.linalg.norm(query)) == 0.0:
            continue
        for cand, score in nearest_neighbors(
                table, query, l, exclude=word if exclude_self else None).entries:
            if cand not in best or score > best[cand]:
                best[cand] = score
    order = {w: i for i, w in enumerate(table.vocab)}
    ranked = sorted(best.items(), key=lambda item: (-item[1], order[item[0]]))
    return ranked[:l]


def write_report_json(report: EvalReport, path, config: dict | None = None) -> None:
    """Machine-readable report: hit curve, AUC, counts, config echo."""
    payload = {
        "hits": report.hits,
        "auc": report.auc,
        "l_max": report.l_max,
        "n_pairs": report.n_pairs,
        "skips": report.skips,
        "config": config or {},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def write_per_pair_tsv(report: EvalReport, path) -> None:
    """Rows ``hyponym<TAB>gold<TAB>cluster<TAB>rank`` with ``-`` for misses."""
    with open(path, "w", encoding="utf-8") as fh:
        for row in report.per_pair:
            rank = row.rank if row.rank is not None else "-"
            fh.write(f"{row.hyponym}\t{row.gold}\t{row.cluster}\t{rank}\n")
