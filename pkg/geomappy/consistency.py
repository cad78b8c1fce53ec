"""Comparison of entity-linking runs and cross-lingual consistency scores.

Runs are maps of unit id to ranked QIDs. Lists are deduplicated (first
occurrence wins) before any set arithmetic.

Copyright (c) 2026 geomappy contributors
"""

import json
import logging
import math
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple, Union

from .errors import EmptyMapError, ParseError, RankingError
from .ingest import iter_conll_sentences
from .models import models_v1 as models
from .resolver import country_ranking
from .stats import in_country_share

logger = logging.getLogger(__name__)

RunOutput = Dict[str, List[str]]
ENTITY_TYPES = ("PER", "LOC", "ORG")


def _dedupe(items: Iterable[str]) -> List[str]:
    seen: Set[str] = set()
    out = []
    for item in items:
        if item not in seen:
            seen.add(item)
            out.append(item)
    return out


def _read_jsonl(stream) -> Iterable[Tuple[int, dict]]:
    for lineno, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            yield lineno, json.loads(line)
        except json.JSONDecodeError as ex:
            raise ParseError(f"invalid JSON: {ex.msg}", line=lineno)


def read_run_jsonl(stream) -> RunOutput:
    """Reads `{"unit_id": ..., "qids": [...]}` lines into a run.

    Links-jsonl mentions (records with `candidates`) are accepted as well and
    collapsed per unit like `run_from_mentions` does.
    """
    run: RunOutput = {}
    mentions: List[models.LinkedMention] = []
    for lineno, record in _read_jsonl(stream):
        try:
            if "candidates" in record:
                mentions.append(models.LinkedMention.from_dict(record))
                continue
            qids = [str(q) for q in record["qids"]]
            run[str(record["unit_id"])] = _dedupe(qids)
        except (KeyError, TypeError, ValueError) as ex:
            raise ParseError(f"invalid run record: {ex}", line=lineno)
    for unit, qids in run_from_mentions(mentions).items():
        run[unit] = _dedupe(run.get(unit, []) + qids)
    return run


def read_pairs_jsonl(stream) -> Tuple[RunOutput, RunOutput]:
    """Reads `{"pair_id": ..., "src_qids": [...], "tgt_qids": [...]}` lines."""
    source: RunOutput = {}
    target: RunOutput = {}
    for lineno, record in _read_jsonl(stream):
        try:
            pair_id = str(record["pair_id"])
            source[pair_id] = _dedupe(str(q) for q in record["src_qids"])
            target[pair_id] = _dedupe(str(q) for q in record["tgt_qids"])
        except (KeyError, TypeError) as ex:
            raise ParseError(f"invalid pair record: {ex}", line=lineno)
    return source, target


def run_from_mentions(mentions: Iterable[models.LinkedMention]) -> RunOutput:
    """Collapses linked mentions into a run: per unit, every candidate in mention then rank order."""
    run: RunOutput = {}
    for mention in mentions:
        run.setdefault(mention.unit_id, []).extend(mention.qids)
    return {unit: _dedupe(qids) for unit, qids in run.items()}


def agreement_ratio(common: int, relaxed_only: int, informed_total: Optional[int] = None,
                    denominator: str = "relaxed") -> float:
    """Ratio of common links, over the relaxed run's total or the informed run's total."""
    if denominator == "relaxed":
        total = common + relaxed_only
    elif denominator == "informed":
        if informed_total is None:
            raise ValueError("informed denominator needs the informed total")
        total = informed_total
    else:
        raise ValueError(f"unknown denominator: {denominator}")
    return common / total if total else 0.0


def agreement_at_k(
    run_informed: RunOutput, run_relaxed: RunOutput, k: int, denominator: str = "relaxed"
) -> models.AgreementResult:
    """Overlap of the two runs' top-k sets, summed over units.

    Units present in only one run are compared against an empty list and
    counted in `missing_units`.
    """
    if k < 1:
        raise ValueError("k must be >= 1")

    units = sorted(set(run_informed) | set(run_relaxed))
    missing = sum(1 for u in units if u not in run_informed or u not in run_relaxed)
    if missing:
        logger.warning(f"{missing} units are present in only one run")

    common = relaxed_only = informed_total = 0
    for unit in units:
        a = set(_dedupe(run_informed.get(unit, []))[:k])
        b = set(_dedupe(run_relaxed.get(unit, []))[:k])
        common += len(a & b)
        relaxed_only += len(b - a)
        informed_total += len(a)

    return models.AgreementResult(
        common=common,
        relaxed_only=relaxed_only,
        informed_total=informed_total,
        ratio=agreement_ratio(common, relaxed_only, informed_total, denominator),
        missing_units=missing,
    )


def agreement_profile(
    run_informed: RunOutput, run_relaxed: RunOutput, ks: Sequence[int] = (1, 2, 3), denominator: str = "relaxed"
) -> Dict[int, models.AgreementResult]:
    return {k: agreement_at_k(run_informed, run_relaxed, k, denominator) for k in ks}


def _check_ranking(ranking: Sequence[str], name: str) -> None:
    if len(set(ranking)) != len(ranking):
        raise RankingError(f"ranking {name} contains duplicates")


def rbo(
    rank_a: Sequence[str],
    rank_b: Sequence[str],
    p: float = 0.9,
    k: Optional[int] = None,
    variant: str = "ext",
) -> float:
    """Rank-biased overlap of two rankings evaluated to depth k.

    Args:
        rank_a (list): First ranking, no duplicates.
        rank_b (list): Second ranking, no duplicates.
        p (float, optional): Persistence, 0 < p < 1. Defaults to 0.9.
        k (int, optional): Evaluation depth; defaults to the longer list.
        variant (str, optional): "ext" extrapolates the agreement at depth k,
            "min" assumes no further overlap. Defaults to "ext".

    Returns:
        float: Value in [0, 1]; identical truncated rankings give exactly 1 with "ext".
    """
    if not 0 < p < 1:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    if k is not None and k < 1:
        raise ValueError("k must be >= 1")
    if variant not in ("ext", "min"):
        raise ValueError(f"unknown rbo variant: {variant}")
    _check_ranking(rank_a, "a")
    _check_ranking(rank_b, "b")

    depth = max(len(rank_a), len(rank_b))
    if k is not None:
        depth = min(depth, k)
    if depth == 0:
        return 1.0 if not rank_a and not rank_b else 0.0

    a, b = list(rank_a[:depth]), list(rank_b[:depth])
    if variant == "ext" and a == b:
        return 1.0

    seen_a: Set[str] = set()
    seen_b: Set[str] = set()
    overlap = 0
    overlaps = []
    for d in range(depth):
        x = a[d] if d < len(a) else None
        y = b[d] if d < len(b) else None
        if x is not None and x == y:
            overlap += 1
        else:
            if x is not None:
                overlap += x in seen_b
                seen_a.add(x)
            if y is not None:
                overlap += y in seen_a
                seen_b.add(y)
        overlaps.append(overlap)

    scale = (1 - p) / p
    if variant == "ext":
        total = math.fsum(p ** d * overlaps[d - 1] / d for d in range(1, depth + 1))
        value = scale * total + (overlaps[-1] / depth) * p ** depth
    else:
        x_k = overlaps[-1]
        total = math.fsum(p ** d * (overlaps[d - 1] - x_k) / d for d in range(1, depth + 1))
        value = scale * (total - x_k * math.log(1 - p))
    return min(1.0, max(0.0, value))


def rbo_profile(
    rank_a: Sequence[str], rank_b: Sequence[str], ks: Sequence[int], p: float = 0.9, variant: str = "ext"
) -> Dict[int, float]:
    return {k: rbo(rank_a, rank_b, p, k, variant) for k in ks}


def el_consistency(source_sets: RunOutput, target_sets: RunOutput, k: int) -> models.ConsistencyScore:
    """Mean share of a source sentence's top-k entities also linked in its translation, in percent.

    Pairs with an empty source list are skipped and counted.
    """
    if k < 1:
        raise ValueError("k must be >= 1")

    ratios = []
    skipped = 0
    for pair_id in sorted(source_sets):
        source = set(_dedupe(source_sets[pair_id])[:k])
        if not source:
            skipped += 1
            continue
        target = set(_dedupe(target_sets.get(pair_id, []))[:k])
        ratios.append(len(source & target) / len(source))

    percentage = 100.0 * math.fsum(ratios) / len(ratios) if ratios else 0.0
    return models.ConsistencyScore(percentage=percentage, pairs=len(ratios), skipped=skipped)


def el_consistency_profile(
    source_sets: RunOutput, target_sets: RunOutput, ks: Sequence[int] = (1, 3, 5)
) -> Dict[int, models.ConsistencyScore]:
    return {k: el_consistency(source_sets, target_sets, k) for k in ks}


def extract_spans(tags: Sequence[str]) -> Set[Tuple[int, int, str]]:
    """Entity spans (start, end, type) of a label sequence, end exclusive.

    Accepts BIO/BIOES tags as well as bare labels, where a run of the same
    label is one entity.
    """
    spans = set()
    current: Optional[List] = None

    def close():
        nonlocal current
        if current is not None:
            spans.add((current[0], current[1], current[2]))
            current = None

    for i, tag in enumerate(tags):
        if tag == "O" or not tag:
            close()
            continue
        prefix, sep, label = tag.partition("-")
        if not sep or prefix not in ("B", "I", "E", "S"):
            prefix, label = "I", tag
        if prefix in ("I", "E") and current is not None and current[2] == label:
            current[1] = i + 1
        else:
            close()
            current = [i, i + 1, label]
        if prefix in ("E", "S"):
            close()
    close()
    return spans


def projection_prf(
    projected_labels: Sequence[Union[str, Sequence[str]]],
    predicted_labels: Sequence[Union[str, Sequence[str]]],
    labels: Sequence[str] = ENTITY_TYPES,
) -> models.PrfScore:
    """Entity-level precision/recall/F1 of predictions against projected labels.

    Both inputs are either one label sequence or a list of sentences. Only
    entity types in `labels` are scored; undefined ratios are 0.

    Raises:
        ValueError: The sequences (or any sentence pair) differ in length.
    """
    gold_sents = [projected_labels] if projected_labels and isinstance(projected_labels[0], str) else projected_labels
    pred_sents = [predicted_labels] if predicted_labels and isinstance(predicted_labels[0], str) else predicted_labels
    if len(gold_sents) != len(pred_sents):
        raise ValueError(f"sentence count mismatch: {len(gold_sents)} vs {len(pred_sents)}")

    allowed = set(labels)
    gold: Set[Tuple] = set()
    pred: Set[Tuple] = set()
    for n, (g, s) in enumerate(zip(gold_sents, pred_sents)):
        if len(g) != len(s):
            raise ValueError(f"label count mismatch in sentence {n + 1}: {len(g)} vs {len(s)}")
        gold.update((n,) + span for span in extract_spans(g) if span[2] in allowed)
        pred.update((n,) + span for span in extract_spans(s) if span[2] in allowed)

    tp = len(gold & pred)
    fp = len(pred - gold)
    fn = len(gold - pred)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return models.PrfScore(precision=precision, recall=recall, f1=f1, tp=tp, fp=fp, fn=fn)


def read_label_sentences(stream) -> List[List[str]]:
    """Reads the tag column of a CoNLL file, one list per sentence."""
    return [[tag for _, tag, _, _ in sentence] for sentence in iter_conll_sentences(stream)]


def compare_maps(
    map_a: models.DatasetMap,
    map_b: models.DatasetMap,
    profile: Optional[models.LanguageProfile] = None,
    ks: Sequence[int] = (1, 2, 3),
    p: float = 0.9,
    variant: str = "ext",
) -> models.MapComparison:
    """Compares two maps of one corpus by in-country share and RBO of their country rankings."""
    rank_a = country_ranking(map_a)
    rank_b = country_ranking(map_b)

    share_a = share_b = delta = None
    if profile is not None:
        try:
            share_a = in_country_share(map_a, profile)
            share_b = in_country_share(map_b, profile)
            delta = share_b - share_a
        except EmptyMapError as ex:
            logger.warning(f"in-country share unavailable: {ex}")

    top = max(ks) if ks else 0
    return models.MapComparison(
        share_a=share_a,
        share_b=share_b,
        share_delta=delta,
        rbo=rbo_profile(rank_a, rank_b, ks, p, variant),
        top_a=rank_a[:top],
        top_b=rank_b[:top],
    )
