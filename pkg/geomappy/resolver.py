"""Maps Wikidata entities to modern countries and aggregates dataset maps.

Rules by entity type:
    person:        place of birth (P19), place of death (P20), citizenship (P27)
    location:      the item itself if it is a registered country, else its country (P17)
    organization:  location (P276), headquarters (P159)

Place-valued properties go through `resolve_place` (at most one P17 hop).
Polity-valued properties (P17, P27) are checked against the registry directly;
unregistered polities are evidence for the historical bucket.

Copyright (c) 2026 geomappy contributors
"""

import json
import logging
import math
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Iterable, List, Optional, Tuple

from pydantic import ValidationError
from tqdm import tqdm

from .client_v1 import CITIZENSHIP, COUNTRY, HEADQUARTERS, LOCATION, PLACE_OF_BIRTH, PLACE_OF_DEATH
from .errors import ParseError
from .handlers.handler_v1 import KbHandler
from .models import models_v1 as models

logger = logging.getLogger(__name__)

REGISTRY_FILE = os.path.join(os.path.dirname(__file__), "data", "countries_v1.jsonl")

POLITY_PROPERTIES = {COUNTRY, CITIZENSHIP}
RULES = {
    models.TypeHint.person: [PLACE_OF_BIRTH, PLACE_OF_DEATH, CITIZENSHIP],
    models.TypeHint.location: [COUNTRY],
    models.TypeHint.organization: [LOCATION, HEADQUARTERS],
}
ALL_PROPERTIES = [pid for hint in models.TypeHint for pid in RULES[hint]]


def load_registry(path: Optional[str] = None) -> models.CountryRegistry:
    """Loads the country registry (defaults to the bundled `countries_v1.jsonl`)."""
    path = path or REGISTRY_FILE
    entries: Dict[str, models.CountryEntry] = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                entry = models.CountryEntry(**json.loads(line))
            except (json.JSONDecodeError, TypeError, ValidationError) as ex:
                raise ParseError(f"invalid registry record in {path}: {ex}", line=lineno)
            if entry.qid in entries:
                raise ParseError(f"duplicate registry qid {entry.qid}", line=lineno)
            entries[entry.qid] = entry
    try:
        return models.CountryRegistry(entries=entries)
    except ValidationError as ex:
        raise ParseError(f"invalid registry {path}: {ex}")


def _polity(target: str, registry: models.CountryRegistry, countries: set) -> bool:
    """Adds a registered polity to `countries`, returns True for historical evidence."""
    iso3 = registry.iso3_of(target)
    if iso3 is None:
        return True
    countries.add(iso3)
    return False


def _outcome(qid: str, countries: set, historical: bool) -> models.Resolution:
    if countries:
        return models.Resolution.of_countries(qid, countries)
    if historical:
        return models.Resolution.historical(qid)
    return models.Resolution.unresolved(qid)


def resolve_place(qid: str, kb: KbHandler, registry: models.CountryRegistry) -> models.Resolution:
    """Resolves a place: a registered country maps to itself, anything else follows P17 once.

    Args:
        qid (str): The place QID.
        kb (KbHandler): Knowledge records.
        registry (CountryRegistry): The modern-country universe.

    Returns:
        Resolution: Countries, Historical (only unregistered P17 targets) or Unresolved.
    """
    iso3 = registry.iso3_of(qid)
    if iso3 is not None:
        return models.Resolution.of_countries(qid, [iso3])

    entity = kb.single(qid)
    if entity is None:
        logger.debug(f"{qid} not in knowledge base")
        return models.Resolution.unresolved(qid)

    countries: set = set()
    historical = False
    for target in entity.values(COUNTRY):
        historical |= _polity(target, registry, countries)
    return _outcome(qid, countries, historical)


def resolve_entity(
    qid: str,
    type_hint: Optional[models.TypeHint],
    kb: KbHandler,
    registry: models.CountryRegistry,
) -> models.Resolution:
    """Resolves an entity of any type to the union of countries its rules reach.

    The hint picks the rule set; without one all rule sets are applied and their
    countries unioned. A non-empty country set always wins over historical evidence.
    """
    entity = kb.single(qid)
    properties = RULES[type_hint] if type_hint is not None else ALL_PROPERTIES

    countries: set = set()
    historical = False
    if COUNTRY in properties and qid in registry:
        countries.add(registry.iso3_of(qid))
    if entity is None:
        if not countries:
            logger.debug(f"{qid} not in knowledge base")
        return _outcome(qid, countries, historical)

    for pid in properties:
        for target in entity.values(pid):
            if pid in POLITY_PROPERTIES:
                historical |= _polity(target, registry, countries)
                continue
            place = resolve_place(target, kb, registry)
            if place.outcome == "countries":
                countries.update(place.countries)
            elif place.outcome == "historical":
                historical = True

    return _outcome(qid, countries, historical)


class Resolver:
    """Memoizing resolver, safe to share between threads."""

    def __init__(self, kb: KbHandler, registry: models.CountryRegistry) -> None:
        self.kb = kb
        self.registry = registry
        self._memo: Dict[Tuple[str, Optional[models.TypeHint]], models.Resolution] = {}
        self._lock = threading.Lock()

    def resolve(self, qid: str, type_hint: Optional[models.TypeHint] = None) -> models.Resolution:
        key = (qid, type_hint)
        cached = self._memo.get(key)
        if cached is not None:
            return cached
        result = resolve_entity(qid, type_hint, self.kb, self.registry)
        with self._lock:
            return self._memo.setdefault(key, result)

    def resolve_mention(self, mention: models.LinkedMention, top_k: int = 1) -> Optional[models.Resolution]:
        """First resolvable candidate among the top-k, None for mentions without candidates."""
        if not mention.candidates:
            return None
        hint = models.TypeHint.from_label(mention.ner_label)
        first = None
        for candidate in mention.candidates[:top_k]:
            result = self.resolve(candidate.qid, hint)
            if result.is_resolved:
                return result
            first = first or result
        return first

    def __len__(self) -> int:
        return len(self._memo)


def build_dataset_map(
    mentions: Iterable[models.LinkedMention],
    kb: KbHandler,
    registry: models.CountryRegistry,
    top_k: int = 1,
    corpus_id: str = "corpus",
    language: str = "und",
    workers: int = 1,
    progress: bool = False,
    resolver: Optional[Resolver] = None,
) -> models.DatasetMap:
    """Aggregates mentions into per-country entity mass.

    A mention resolving to countries S adds 1/|S| to each of them; historical and
    unresolved mentions (including mentions without candidates) go to the tallies.
    Per-country sums are exact (`math.fsum`), so the result does not depend on
    the order or threading of resolution.

    Args:
        mentions: Linked mentions of one corpus/language.
        kb (KbHandler): Knowledge records.
        registry (CountryRegistry): The modern-country universe.
        top_k (int, optional): Candidates considered per mention. Defaults to 1.
        workers (int, optional): Resolution threads. Defaults to 1.
        progress (bool, optional): Show a progress bar. Defaults to False.
        resolver (Resolver, optional): Reuse a warm resolver.

    Returns:
        DatasetMap
    """
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    mentions = list(mentions)
    if resolver is None:
        resolver = Resolver(kb, registry)

    def _one(mention):
        return resolver.resolve_mention(mention, top_k)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(tqdm(pool.map(_one, mentions), total=len(mentions), disable=not progress))
    else:
        results = [_one(m) for m in tqdm(mentions, disable=not progress)]

    parts: Dict[str, List[float]] = {}
    historical = 0
    unresolved = 0
    for result in results:
        if result is None or result.outcome == "unresolved":
            unresolved += 1
        elif result.outcome == "historical":
            historical += 1
        else:
            share = 1.0 / len(result.countries)
            for iso3 in result.countries:
                parts.setdefault(iso3, []).append(share)

    weights = {iso3: math.fsum(parts[iso3]) for iso3 in sorted(parts)}
    logger.info(
        f"resolved {len(mentions)} mentions: {len(mentions) - historical - unresolved} to countries, "
        f"{historical} historical, {unresolved} unresolved"
    )
    return models.DatasetMap(
        corpus_id=corpus_id,
        language=language,
        weights=weights,
        historical=float(historical),
        unresolved=float(unresolved),
        mentions=len(mentions),
    )


def country_ranking(dataset_map: models.DatasetMap) -> List[str]:
    """Countries with positive weight, by descending weight then ascending iso3."""
    items = [(iso3, w) for iso3, w in dataset_map.weights.items() if w > 0]
    return [iso3 for iso3, _ in sorted(items, key=lambda item: (-item[1], item[0]))]


def read_dataset_map(path: str) -> models.DatasetMap:
    with open(path, "r", encoding="utf-8") as f:
        try:
            return models.DatasetMap.from_dict(json.load(f))
        except json.JSONDecodeError as ex:
            raise ParseError(f"invalid dataset map {path}: {ex.msg}", offset=ex.pos)
        except ValidationError as ex:
            raise ParseError(f"invalid dataset map {path}: {ex}")


def write_dataset_map(dataset_map: models.DatasetMap, stream) -> None:
    """Writes a map as sorted-key JSON."""
    stream.write(json.dumps(dataset_map.model_dump(), sort_keys=True, ensure_ascii=False, indent=2) + "\n")
