"""Remote client for Wikidata entity data.

Fetches `Special:EntityData/<qid>.json` and reduces it to the claims the
resolver follows.

Copyright (c) 2026 geomappy contributors
"""

import logging
from typing import Any, Dict, List, Optional

import requests

from .config import DEFAULT_ENDPOINT
from .errors import KnowledgeFetchError
from .models import models_v1 as models

logger = logging.getLogger(__name__)

# properties followed by the resolver
PLACE_OF_BIRTH = "P19"
PLACE_OF_DEATH = "P20"
CITIZENSHIP = "P27"
COUNTRY = "P17"
HEADQUARTERS = "P159"
LOCATION = "P276"
RELEVANT_PROPERTIES = [COUNTRY, PLACE_OF_BIRTH, PLACE_OF_DEATH, CITIZENSHIP, HEADQUARTERS, LOCATION]

INSTANCE_OF = "P31"
COORDINATES = "P625"
HUMAN = "Q5"


class WikidataClient:
    def __init__(self, endpoint: str = DEFAULT_ENDPOINT, timeout: float = 10.0, user_agent: str = None):
        """Creates a new WikidataClient.

        Args:
            endpoint (str, optional): Base url of the entity data endpoint.
            timeout (float, optional): Request timeout in seconds. Defaults to 10.
            user_agent (str, optional): User agent sent with every request.
        """
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self.user_agent = user_agent or "geomappy/0.1 (Python; dataset geography)"
        self._update_session()

    def _update_session(self):
        """Creates the http session."""
        self.session = requests.Session()
        self.session.headers.update({"User-Agent": self.user_agent, "Accept": "application/json"})

    def _get(self, qid: str) -> requests.Response:
        return self.session.get(f"{self.endpoint}/{qid}.json", timeout=self.timeout)

    def fetch_raw(self, qid: str) -> Optional[Dict[str, Any]]:
        """Returns the raw entity json, or None if the entity does not exist.

        Raises:
            KnowledgeFetchError: Network failure or unexpected status code.
        """
        try:
            res = self._get(qid)
        except requests.RequestException as ex:
            raise KnowledgeFetchError(f"fetching {qid} failed: {ex}")

        if res.status_code == 404:
            return None
        if res.status_code != 200:
            raise KnowledgeFetchError(f"Wikidata returned status code {res.status_code} for {qid}.")

        entities = res.json().get("entities", {})
        if qid in entities:
            return entities[qid]
        # redirected items come back under their new id
        return next(iter(entities.values()), None)

    def fetch(self, qid: str) -> Optional[models.KbEntity]:
        """Fetches an entity and reduces it to a snapshot record."""
        raw = self.fetch_raw(qid)
        if raw is None or "missing" in raw:
            return None
        return parse_entity(qid, raw)


def _claim_targets(raw: Dict[str, Any], pid: str) -> List[str]:
    targets = []
    for statement in raw.get("claims", {}).get(pid, []):
        if statement.get("rank") == "deprecated":
            continue
        value = statement.get("mainsnak", {}).get("datavalue", {}).get("value")
        if isinstance(value, dict) and models.is_qid(value.get("id")) and value["id"] not in targets:
            targets.append(value["id"])
    return targets


def parse_entity(qid: str, raw: Dict[str, Any]) -> models.KbEntity:
    """Reduces raw entity json to the followed claims plus a coarse type.

    Humans (P31 Q5) are persons, items with a headquarters are organizations and
    items with a country or coordinates are locations.
    """
    claims = {}
    for pid in RELEVANT_PROPERTIES:
        targets = _claim_targets(raw, pid)
        if targets:
            claims[pid] = targets

    hint = None
    if HUMAN in _claim_targets(raw, INSTANCE_OF):
        hint = models.TypeHint.person
    elif HEADQUARTERS in claims:
        hint = models.TypeHint.organization
    elif COUNTRY in claims or raw.get("claims", {}).get(COORDINATES):
        hint = models.TypeHint.location

    return models.KbEntity(qid=qid, type_hint=hint, claims=claims)
