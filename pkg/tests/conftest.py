"""Shared fixtures: the bundled registry and a small knowledge snapshot.

Copyright 2026 (C) geomappy contributors
"""

import json

import pytest

from geomappy.handlers.handler_v1 import SnapshotHandler
from geomappy.models import models_v1 as models
from geomappy.resolver import load_registry

# Copernicus and Einstein with their places, plus hand-made edge cases
SNAPSHOT = [
    {"qid": "Q619", "type": "person", "claims": {"P19": ["Q47554"], "P20": ["Q497115"], "P27": ["Q1649871"]}},
    {"qid": "Q47554", "type": "location", "claims": {"P17": ["Q36"]}},
    {"qid": "Q497115", "type": "location", "claims": {"P17": ["Q36"]}},
    {"qid": "Q937", "type": "person", "claims": {"P19": ["Q3012"], "P20": ["Q138518"]}},
    {"qid": "Q3012", "type": "location", "claims": {"P17": ["Q183"]}},
    {"qid": "Q138518", "type": "location", "claims": {"P17": ["Q30"]}},
    # place in a dissolved state
    {"qid": "Q900001", "type": "location", "claims": {"P17": ["Q900002"]}},
    # P17 cycle between two unregistered items
    {"qid": "Q900010", "claims": {"P17": ["Q900011"]}},
    {"qid": "Q900011", "claims": {"P17": ["Q900010"]}},
    # headquartered in Ulm
    {"qid": "Q900020", "type": "organization", "claims": {"P159": ["Q3012"]}},
    # no relevant claims
    {"qid": "Q900030", "type": "person", "claims": {}},
    # born in the dissolved state's place, citizen of an unregistered polity
    {"qid": "Q900040", "type": "person", "claims": {"P19": ["Q900001"], "P27": ["Q900002"]}},
]

SWAHILI_SPEAKERS = {"TZA": 61000000, "KEN": 21000000, "UGA": 3000000, "COD": 9000000, "RWA": 1000000}


@pytest.fixture(scope="session")
def registry() -> models.CountryRegistry:
    return load_registry()


@pytest.fixture
def kb() -> SnapshotHandler:
    return SnapshotHandler.from_entities(models.KbEntity.from_dict(r) for r in SNAPSHOT)


@pytest.fixture
def snapshot_file(tmp_path):
    path = tmp_path / "snapshot.jsonl"
    path.write_text("".join(json.dumps(r) + "\n" for r in SNAPSHOT), encoding="utf-8")
    return path


@pytest.fixture
def swahili_profile() -> models.LanguageProfile:
    return models.LanguageProfile(language="swa", speakers=SWAHILI_SPEAKERS)


@pytest.fixture
def swahili_map() -> models.DatasetMap:
    return models.DatasetMap(
        corpus_id="masakhaner", language="swa", weights={"TZA": 10.0, "KEN": 7.0, "USA": 83.0}, mentions=100
    )


def mention(unit_id, qids, label="UNKNOWN", span=(0, 1)) -> models.LinkedMention:
    return models.LinkedMention.from_dict(
        {
            "unit_id": unit_id,
            "surface": "x",
            "span": list(span),
            "ner_label": label,
            "candidates": [{"qid": q, "score": 1.0 / (i + 1)} for i, q in enumerate(qids)],
        }
    )


@pytest.fixture
def make_mention():
    return mention
