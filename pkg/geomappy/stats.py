"""Representativeness measures over dataset maps.

Copyright (c) 2026 geomappy contributors
"""

import json
import logging
import math
from collections import Counter
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError

from .errors import EmptyMapError, ParseError, UnknownCountryError
from .models import models_v1 as models
from .resolver import load_registry

logger = logging.getLogger(__name__)

NORMALIZATION_TOLERANCE = 1e-6


def load_profile(path: str) -> models.LanguageProfile:
    """Reads a language profile `{"language": ..., "speakers": {iso3: count}}`."""
    with open(path, "r", encoding="utf-8") as f:
        try:
            return models.LanguageProfile(**json.load(f))
        except json.JSONDecodeError as ex:
            raise ParseError(f"invalid profile {path}: {ex.msg}", offset=ex.pos)
        except (TypeError, ValidationError) as ex:
            raise ParseError(f"invalid profile {path}: {ex}")


def read_item_scores(path: str) -> Dict[str, float]:
    """Reads JSON-lines `{"item_id": ..., "score": ...}` records."""
    scores = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                scores[str(record["item_id"])] = float(record["score"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as ex:
                raise ParseError(f"invalid item score record: {ex}", line=lineno)
    return scores


def in_country_share(dataset_map: models.DatasetMap, profile: models.LanguageProfile) -> float:
    """Fraction of entity mass on countries where the language is largely spoken.

    Raises:
        EmptyMapError: The map has no country weight.
    """
    total = dataset_map.total_weight
    if total <= 0:
        raise EmptyMapError()
    inside = math.fsum(dataset_map.weights.get(c, 0.0) for c in profile.countries)
    return min(1.0, inside / total)


def unrepresented(
    dataset_map: models.DatasetMap, universe: Iterable[str], threshold: float = 0.0
) -> models.Unrepresented:
    """Countries of the universe whose weight is at or below `threshold`."""
    countries = sorted(c for c in set(universe) if dataset_map.weights.get(c, 0.0) <= threshold)
    return models.Unrepresented(count=len(countries), countries=countries)


@lru_cache(maxsize=1)
def _bundled_universe() -> Tuple[str, ...]:
    return tuple(load_registry().universe)


def gini(dataset_map: models.DatasetMap, universe: Optional[Iterable[str]] = None, restricted: bool = False) -> float:
    """Gini index of the weight vector.

    Every country of the universe (the bundled registry unless one is given) is
    one entry, zeros included, and weights outside it are ignored. With
    `restricted` only the map's own countries count.

    Raises:
        EmptyMapError: No positive weight in the vector.
    """
    if restricted:
        values = list(dataset_map.weights.values())
    else:
        universe = set(_bundled_universe() if universe is None else universe)
        outside = [c for c in dataset_map.weights if c not in universe]
        if outside:
            logger.warning(f"gini ignores {len(outside)} countries outside the universe: {sorted(outside)}")
        values = [dataset_map.weights.get(c, 0.0) for c in universe]

    x = np.sort(np.asarray(values, dtype=float))
    if x.size == 0 or x.sum() <= 0:
        raise EmptyMapError()

    n = x.size
    index = np.arange(1, n + 1)
    value = (2.0 * np.dot(index, x)) / (n * x.sum()) - (n + 1.0) / n
    return float(max(0.0, value))


def bhattacharyya(p: Dict[str, float], q: Dict[str, float]) -> float:
    """Bhattacharyya coefficient of two distributions over (the union of) their keys.

    Raises:
        ValueError: Either input does not sum to 1.
    """
    for name, dist in (("p", p), ("q", q)):
        total = math.fsum(dist.values())
        if abs(total - 1.0) > NORMALIZATION_TOLERANCE:
            raise ValueError(f"{name} is not normalized (sums to {total})")
    keys = sorted(set(p) | set(q))
    value = math.fsum(math.sqrt(p.get(k, 0.0) * q.get(k, 0.0)) for k in keys)
    return min(1.0, value)


def _normalize(values: Dict[str, float]) -> Dict[str, float]:
    total = math.fsum(values.values())
    if total <= 0:
        return {k: 0.0 for k in values}
    return {k: v / total for k, v in values.items()}


def speaker_comparison(
    dataset_map: models.DatasetMap, profile: models.LanguageProfile
) -> models.SpeakerComparison:
    """Entity share and speaker share over the profile countries, both normalized."""
    countries = profile.countries
    entity = _normalize({c: dataset_map.weights.get(c, 0.0) for c in countries})
    speaker = _normalize({c: float(profile.speakers[c]) for c in countries})
    empty = not any(entity.values())
    if empty:
        logger.warning(f"no in-country entity mass for {profile.language}")
    return models.SpeakerComparison(
        countries=countries, entity_share=entity, speaker_share=speaker, entity_empty=empty
    )


def region_rollup(dataset_map: models.DatasetMap, registry: models.CountryRegistry) -> Dict[str, float]:
    """Sums weights by region; the historical tally is reported as `History`.

    Raises:
        UnknownCountryError: A weighted country is not in the registry.
    """
    parts: Dict[str, List[float]] = {}
    for iso3 in sorted(dataset_map.weights):
        entry = registry.by_iso3(iso3)
        if entry is None:
            raise UnknownCountryError(iso3)
        parts.setdefault(entry.region.value, []).append(dataset_map.weights[iso3])

    rollup = {region: math.fsum(values) for region, values in sorted(parts.items())}
    if dataset_map.historical > 0:
        rollup[models.HISTORY] = dataset_map.historical
    return rollup


def region_shares(dataset_map: models.DatasetMap, registry: models.CountryRegistry) -> Dict[str, float]:
    """`region_rollup` normalized to sum to 1."""
    rollup = region_rollup(dataset_map, registry)
    if math.fsum(rollup.values()) <= 0:
        raise EmptyMapError()
    return _normalize(rollup)


def item_regions(
    mentions: Iterable[models.LinkedMention],
    resolver,
    top_k: int = 1,
) -> Dict[str, List[str]]:
    """Regions touched by each unit's entities, one entry per resolved country (repeats kept).

    Args:
        mentions: Linked mentions, grouped by `unit_id`.
        resolver (Resolver): Resolver over a knowledge base and registry.
        top_k (int, optional): Candidates considered per mention.
    """
    regions: Dict[str, List[str]] = {}
    for mention in mentions:
        found = regions.setdefault(mention.unit_id, [])
        result = resolver.resolve_mention(mention, top_k)
        if result is None or not result.is_resolved:
            continue
        if result.outcome == "historical":
            found.append(models.HISTORY)
            continue
        for iso3 in result.countries:
            found.append(resolver.registry.by_iso3(iso3).region.value)
    return regions


def _dominant(regions: Sequence[str]) -> str:
    counts = Counter(regions)
    return min(counts, key=lambda r: (-counts[r], r))


def region_performance(
    item_scores: Dict[str, float],
    item_regions: Dict[str, Sequence[str]],
    mode: str = "all",
) -> models.RegionBreakdown:
    """Mean score per region and the population standard deviation over those means.

    Args:
        item_scores (dict): item id to score (0-100 scale).
        item_regions (dict): item id to the regions of its entities.
        mode (str, optional): "all" counts an item once in every region it touches,
            "dominant" only in its most frequent region (ties alphabetical).

    Returns:
        RegionBreakdown: Items with no regions are counted in `excluded`.
    """
    if mode not in ("all", "dominant"):
        raise ValueError(f"unknown region mode: {mode}")

    scores: Dict[str, List[float]] = {}
    excluded = 0
    for item_id in sorted(item_scores):
        regions = item_regions.get(item_id) or []
        if not regions:
            excluded += 1
            continue
        targets = {_dominant(regions)} if mode == "dominant" else set(regions)
        for region in targets:
            scores.setdefault(region, []).append(item_scores[item_id])

    if excluded:
        logger.warning(f"{excluded} items without regions excluded")

    means = {r: math.fsum(v) / len(v) for r, v in sorted(scores.items())}
    counts = {r: len(v) for r, v in sorted(scores.items())}
    macro = float(np.std(list(means.values()))) if means else 0.0
    return models.RegionBreakdown(means=means, counts=counts, macro_stdev=macro, excluded=excluded)
