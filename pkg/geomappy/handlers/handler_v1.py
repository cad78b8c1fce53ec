"""Handlers that give the resolver access to knowledge records.

`SnapshotHandler` serves a local JSON-lines snapshot, `WikidataHandler` fetches
missing entities remotely and appends them to an on-disk cache in snapshot
format, and `KnowledgeBase` chains them (snapshot, then cache, then remote).

Copyright (c) 2026 geomappy contributors
"""

import json
import logging
import os
import threading
from typing import Dict, Iterable, List, Optional

import pandas as pd
from pydantic import ValidationError

from geomappy.client_v1 import WikidataClient
from geomappy.config import Settings
from geomappy.errors import KnowledgeFetchError, ParseError
from geomappy.models import models_v1 as models

logger = logging.getLogger(__name__)

CACHE_FILE = "entities.jsonl"


def read_snapshot(path: str) -> Dict[str, models.KbEntity]:
    """Reads a JSON-lines snapshot into a dict keyed by qid (later lines win)."""
    records: Dict[str, models.KbEntity] = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                entity = models.KbEntity.from_dict(json.loads(line))
            except (json.JSONDecodeError, KeyError, ValidationError) as ex:
                raise ParseError(f"invalid snapshot record in {path}: {ex}", line=lineno)
            records[entity.qid] = entity
    return records


class KbHandler:
    """Base class for knowledge record access."""

    def single(self, qid: str) -> Optional[models.KbEntity]:
        raise NotImplementedError

    def collection(self, qids: Iterable[str]) -> List[models.KbEntity]:
        """Gets all known records of the given qids, in order."""
        items = []
        for qid in qids:
            entity = self.single(qid)
            if entity is not None:
                items.append(entity)
        return items

    def _to_df(self, data: List[models.KbEntity]) -> pd.DataFrame:
        """Converts the given records to a pandas DataFrame (one `claims.Pnn` column per property)."""
        return pd.json_normalize([d.to_record() for d in data])

    def collection_df(self, qids: Iterable[str]) -> pd.DataFrame:
        return self._to_df(self.collection(qids))


class SnapshotHandler(KbHandler):
    def __init__(self, records: Optional[Dict[str, models.KbEntity]] = None) -> None:
        self._records = dict(records or {})

    @classmethod
    def from_file(cls, path: str) -> "SnapshotHandler":
        handler = cls(read_snapshot(path))
        logger.info(f"loaded {len(handler)} snapshot records from {path}")
        return handler

    @classmethod
    def from_entities(cls, entities: Iterable[models.KbEntity]) -> "SnapshotHandler":
        return cls({e.qid: e for e in entities})

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, qid: str) -> bool:
        return qid in self._records

    def single(self, qid: str) -> Optional[models.KbEntity]:
        return self._records.get(qid)


class WikidataHandler(KbHandler):
    """Remote fetches with an append-only on-disk cache.

    Reads may run concurrently; fetches and cache writes are serialized.
    """

    def __init__(self, client: WikidataClient, cache_dir: Optional[str] = None) -> None:
        self.client = client
        self.cache_path = os.path.join(cache_dir, CACHE_FILE) if cache_dir else None
        self._lock = threading.Lock()
        self._records: Dict[str, Optional[models.KbEntity]] = {}
        if self.cache_path and os.path.exists(self.cache_path):
            self._records.update(read_snapshot(self.cache_path))

    def _append(self, entity: models.KbEntity) -> None:
        if not self.cache_path:
            return
        os.makedirs(os.path.dirname(self.cache_path), exist_ok=True)
        with open(self.cache_path, "a", encoding="utf-8") as f:
            f.write(json.dumps(entity.to_record(), ensure_ascii=False) + "\n")

    def single(self, qid: str) -> Optional[models.KbEntity]:
        if qid in self._records:
            return self._records[qid]

        with self._lock:
            if qid in self._records:
                return self._records[qid]
            entity = self.client.fetch(qid)
            if entity is not None:
                self._append(entity)
            # misses are remembered for this run only
            self._records[qid] = entity
            return entity


class KnowledgeBase(KbHandler):
    """Snapshot-first lookup with an optional remote fallback.

    Remote failures are logged and treated as misses, so they end up as
    unresolved mentions instead of aborting a run.
    """

    def __init__(self, snapshot: Optional[SnapshotHandler] = None, remote: Optional[WikidataHandler] = None) -> None:
        self.snapshot = snapshot if snapshot is not None else SnapshotHandler()
        self.remote = remote
        self.fetch_failures = 0
        self._failures_lock = threading.Lock()

    @classmethod
    def from_settings(cls, snapshot_path: Optional[str], settings: Settings) -> "KnowledgeBase":
        snapshot = SnapshotHandler.from_file(snapshot_path) if snapshot_path else SnapshotHandler()
        remote = None
        if settings.kb.remote:
            client = WikidataClient(settings.kb.endpoint, settings.kb.timeout)
            remote = WikidataHandler(client, settings.kb.cache_dir)
        return cls(snapshot, remote)

    def single(self, qid: str) -> Optional[models.KbEntity]:
        entity = self.snapshot.single(qid)
        if entity is not None or self.remote is None:
            return entity
        try:
            return self.remote.single(qid)
        except KnowledgeFetchError as ex:
            with self._failures_lock:
                self.fetch_failures += 1
            logger.warning(f"remote lookup failed, treating {qid} as missing: {ex}")
            return None
