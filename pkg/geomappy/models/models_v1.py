"""Holds the data models used throughout geomappy.

All records that cross a file boundary (mentions, snapshot entries, registry
rows, dataset maps, reports) are pydantic models with a `from_dict` helper
for the on-disk layout.

Copyright (c) 2026 geomappy contributors
"""

import math
import re
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import pandas as pd
from pydantic import BaseModel, Field, PrivateAttr, field_validator, model_validator

QID_PATTERN = re.compile(r"^Q[0-9]+$")
PID_PATTERN = re.compile(r"^P[0-9]+$")
ISO3_PATTERN = re.compile(r"^[A-Z]{3}$")

# bucket for entities that only resolve to former polities
HISTORY = "History"


def is_qid(value: Any) -> bool:
    return isinstance(value, str) and QID_PATTERN.match(value) is not None


class NerLabel(str, Enum):
    PER = "PER"
    LOC = "LOC"
    ORG = "ORG"
    OTHER = "OTHER"
    UNKNOWN = "UNKNOWN"

    @classmethod
    def from_tag(cls, tag: str) -> "NerLabel":
        """Maps the type part of a B-/I- tag, unknown schemes collapse to OTHER."""
        try:
            return cls(tag.upper())
        except ValueError:
            return cls.OTHER


class TypeHint(str, Enum):
    person = "person"
    location = "location"
    organization = "organization"

    @classmethod
    def from_label(cls, label: NerLabel) -> Optional["TypeHint"]:
        return {
            NerLabel.PER: cls.person,
            NerLabel.LOC: cls.location,
            NerLabel.ORG: cls.organization,
        }.get(label)


class Region(str, Enum):
    Africa = "Africa"
    Americas = "Americas"
    Asia = "Asia"
    Europe = "Europe"
    Oceania = "Oceania"


# ---------------------------------------------------------------- corpus


class TextUnit(BaseModel):
    """A sentence or question from a corpus."""

    corpus_id: str
    unit_id: str
    language: str
    text: str

    @field_validator("text")
    @classmethod
    def _text_not_blank(cls, value: str) -> str:
        if not value.strip():
            raise ValueError("text must not be empty")
        return value


class Candidate(BaseModel):
    """A ranked Wikidata candidate for a mention."""

    qid: str
    score: float
    rank: int = Field(ge=1)

    @field_validator("qid")
    @classmethod
    def _valid_qid(cls, value: str) -> str:
        if not is_qid(value):
            raise ValueError(f"invalid qid: {value}")
        return value


class LinkedMention(BaseModel):
    """One entity mention with its (possibly empty) candidate list."""

    unit_id: str
    surface: str
    span: Tuple[int, int]
    ner_label: NerLabel = NerLabel.UNKNOWN
    candidates: List[Candidate] = Field(default_factory=list)

    @field_validator("span")
    @classmethod
    def _valid_span(cls, value: Tuple[int, int]) -> Tuple[int, int]:
        start, end = value
        if start < 0 or start >= end:
            raise ValueError(f"invalid span: {value}")
        return value

    @field_validator("candidates")
    @classmethod
    def _ranks_increasing(cls, value: List[Candidate]) -> List[Candidate]:
        for expected, cand in enumerate(value, start=1):
            if cand.rank != expected:
                raise ValueError("candidate ranks must run 1..n in order")
        return value

    @property
    def qids(self) -> List[str]:
        return [c.qid for c in self.candidates]

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "LinkedMention":
        """Builds a mention from a links-jsonl record, assigning ranks in listed order."""
        candidates = [
            Candidate(qid=c["qid"], score=float(c.get("score", 0.0)), rank=i)
            for i, c in enumerate(data.get("candidates", []), start=1)
        ]
        label = data.get("ner_label") or NerLabel.UNKNOWN.value
        return cls(
            unit_id=str(data["unit_id"]),
            surface=data["surface"],
            span=tuple(data["span"]),
            ner_label=NerLabel.from_tag(label),
            candidates=candidates,
        )

    def to_record(self) -> Dict[str, Any]:
        """Inverse of `from_dict`."""
        return {
            "unit_id": self.unit_id,
            "surface": self.surface,
            "span": list(self.span),
            "ner_label": self.ner_label.value,
            "candidates": [{"qid": c.qid, "score": c.score} for c in self.candidates],
        }


class ParseResult(BaseModel):
    """Output of the corpus parsers, including the recoverable-problem tallies."""

    units: List[TextUnit] = Field(default_factory=list)
    mentions: List[LinkedMention] = Field(default_factory=list)
    warnings: int = 0
    skipped: int = 0
    rejected: int = 0


# ------------------------------------------------------------- knowledge


class KbEntity(BaseModel):
    """A knowledge snapshot record."""

    qid: str
    type_hint: Optional[TypeHint] = None
    claims: Dict[str, List[str]] = Field(default_factory=dict)

    @field_validator("qid")
    @classmethod
    def _valid_qid(cls, value: str) -> str:
        if not is_qid(value):
            raise ValueError(f"invalid qid: {value}")
        return value

    @field_validator("claims")
    @classmethod
    def _valid_claims(cls, value: Dict[str, List[str]]) -> Dict[str, List[str]]:
        for pid, targets in value.items():
            if not PID_PATTERN.match(pid):
                raise ValueError(f"invalid property id: {pid}")
            for target in targets:
                if not is_qid(target):
                    raise ValueError(f"invalid claim value for {pid}: {target}")
        return value

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "KbEntity":
        """Parses the snapshot layout (`type` instead of `type_hint`)."""
        hint = data.get("type", data.get("type_hint"))
        return cls(qid=data["qid"], type_hint=hint, claims=data.get("claims") or {})

    def to_record(self) -> Dict[str, Any]:
        record: Dict[str, Any] = {"qid": self.qid}
        if self.type_hint is not None:
            record["type"] = self.type_hint.value
        record["claims"] = {pid: list(vals) for pid, vals in sorted(self.claims.items())}
        return record

    def values(self, pid: str) -> List[str]:
        return self.claims.get(pid, [])


class CountryEntry(BaseModel):
    """A modern country (or ISO-coded territory) in the registry."""

    qid: str
    iso3: str
    region: Region
    centroid: Tuple[float, float]

    @field_validator("iso3")
    @classmethod
    def _valid_iso3(cls, value: str) -> str:
        if not ISO3_PATTERN.match(value):
            raise ValueError(f"invalid iso3 code: {value}")
        return value

    @field_validator("centroid")
    @classmethod
    def _valid_centroid(cls, value: Tuple[float, float]) -> Tuple[float, float]:
        lat, lon = value
        if not (-90.0 <= lat <= 90.0 and -180.0 <= lon <= 180.0):
            raise ValueError(f"centroid out of range: {value}")
        return value


class CountryRegistry(BaseModel):
    """The modern-country universe, keyed by QID."""

    entries: Dict[str, CountryEntry]
    _by_iso3: Dict[str, CountryEntry] = PrivateAttr(default_factory=dict)

    @model_validator(mode="after")
    def _unique_iso3(self) -> "CountryRegistry":
        seen = set()
        for entry in self.entries.values():
            if entry.iso3 in seen:
                raise ValueError(f"duplicate iso3 in registry: {entry.iso3}")
            seen.add(entry.iso3)
        return self

    def model_post_init(self, __context: Any) -> None:
        self._by_iso3 = {e.iso3: e for e in self.entries.values()}

    def __contains__(self, qid: str) -> bool:
        return qid in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def iso3_of(self, qid: str) -> Optional[str]:
        entry = self.entries.get(qid)
        return entry.iso3 if entry else None

    def by_iso3(self, iso3: str) -> Optional[CountryEntry]:
        return self._by_iso3.get(iso3)

    @property
    def universe(self) -> List[str]:
        return sorted(self._by_iso3)


class Resolution(BaseModel):
    """Outcome of mapping one QID to modern countries."""

    qid: str
    outcome: str = Field(pattern="^(countries|historical|unresolved)$")
    countries: Tuple[str, ...] = ()

    @model_validator(mode="after")
    def _consistent(self) -> "Resolution":
        if (self.outcome == "countries") != bool(self.countries):
            raise ValueError("countries must be non-empty exactly for a countries outcome")
        return self

    @classmethod
    def of_countries(cls, qid: str, countries) -> "Resolution":
        return cls(qid=qid, outcome="countries", countries=tuple(sorted(set(countries))))

    @classmethod
    def historical(cls, qid: str) -> "Resolution":
        return cls(qid=qid, outcome="historical")

    @classmethod
    def unresolved(cls, qid: str) -> "Resolution":
        return cls(qid=qid, outcome="unresolved")

    @property
    def is_resolved(self) -> bool:
        return self.outcome != "unresolved"


# ------------------------------------------------------------ statistics


class DatasetMap(BaseModel):
    """Per-country entity mass of one corpus/language."""

    corpus_id: str
    language: str
    weights: Dict[str, float] = Field(default_factory=dict)
    historical: float = 0.0
    unresolved: float = 0.0
    mentions: int = 0

    @field_validator("weights")
    @classmethod
    def _nonneg(cls, value: Dict[str, float]) -> Dict[str, float]:
        for iso3, weight in value.items():
            if weight < 0 or not math.isfinite(weight):
                raise ValueError(f"invalid weight for {iso3}: {weight}")
        return value

    @property
    def total_weight(self) -> float:
        return math.fsum(self.weights[k] for k in sorted(self.weights))

    @property
    def resolved(self) -> int:
        return int(round(self.mentions - self.historical - self.unresolved))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DatasetMap":
        return cls(**data)


class LanguageProfile(BaseModel):
    """Countries where a language is largely spoken, with speaker counts."""

    language: str
    speakers: Dict[str, int]

    @field_validator("speakers")
    @classmethod
    def _valid_speakers(cls, value: Dict[str, int]) -> Dict[str, int]:
        if not value:
            raise ValueError("profile needs at least one country")
        for iso3, count in value.items():
            if count < 0:
                raise ValueError(f"negative speaker count for {iso3}")
        return value

    @property
    def countries(self) -> List[str]:
        return sorted(self.speakers)


class SpeakerComparison(BaseModel):
    """Entity share vs. speaker share over a profile's countries."""

    countries: List[str]
    entity_share: Dict[str, float]
    speaker_share: Dict[str, float]
    entity_empty: bool = False


class Unrepresented(BaseModel):
    count: int
    countries: List[str]


class RegionBreakdown(BaseModel):
    """Per-region mean scores of an evaluation set."""

    means: Dict[str, float]
    counts: Dict[str, int]
    macro_stdev: float
    excluded: int = 0

    def to_df(self) -> pd.DataFrame:
        """Returns the breakdown as a DataFrame indexed by region."""
        regions = sorted(self.counts)
        return pd.DataFrame(
            {
                "mean": [self.means.get(r) for r in regions],
                "count": [self.counts[r] for r in regions],
            },
            index=pd.Index(regions, name="region"),
        )


# ---------------------------------------------------------------- factors


class FactorRow(BaseModel):
    """Socioeconomic covariates of one country; missing values are flagged."""

    iso3: str
    pop: Optional[float] = None
    gdp: Optional[float] = None
    gdppc: Optional[float] = None
    land: Optional[float] = None
    centroid: Optional[Tuple[float, float]] = None

    @model_validator(mode="after")
    def _positive(self) -> "FactorRow":
        for name in ("pop", "gdp", "gdppc", "land"):
            value = getattr(self, name)
            if value is not None and (not math.isfinite(value) or value <= 0):
                setattr(self, name, None)
        return self

    @property
    def missing(self) -> List[str]:
        names = [n for n in ("pop", "gdp", "gdppc", "land") if getattr(self, n) is None]
        if self.centroid is None:
            names.append("centroid")
        return names


class FactorTable(BaseModel):
    rows: Dict[str, FactorRow]


class FoldScore(BaseModel):
    explained_variance: float
    mae: float
    constant_target: bool = False


class RegressionResult(BaseModel):
    """Cross-validated fit of the factor model."""

    features: List[str]
    coefficients: Dict[str, float]
    intercept: float
    per_fold: List[FoldScore]
    mean_explained_variance: float
    mean_mae: float
    seed: int
    folds: int
    rows: int

    @model_validator(mode="after")
    def _fold_count(self) -> "RegressionResult":
        if len(self.per_fold) != self.folds:
            raise ValueError("per_fold must hold one entry per fold")
        return self


# ------------------------------------------------------------ consistency


class AgreementResult(BaseModel):
    common: int
    relaxed_only: int
    informed_total: int
    ratio: float
    missing_units: int = 0


class PrfScore(BaseModel):
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int


class ConsistencyScore(BaseModel):
    percentage: float
    pairs: int
    skipped: int = 0


class MapComparison(BaseModel):
    """Two dataset maps of the same corpus compared by in-country share and country ranking."""

    share_a: Optional[float] = None
    share_b: Optional[float] = None
    share_delta: Optional[float] = None
    rbo: Dict[int, float]
    top_a: List[str]
    top_b: List[str]


# ----------------------------------------------------------------- report


class ReportTotals(BaseModel):
    mentions: int
    resolved: int
    historical: float
    unresolved: float


class Report(BaseModel):
    """Representativeness report of one dataset map."""

    corpus_id: str
    language: str
    generated_at: Optional[str] = None
    totals: ReportTotals
    country_weights: Dict[str, float]
    in_country_share: Optional[float] = None
    unrepresented: Optional[Unrepresented] = None
    gini: Optional[float] = None
    speaker_comparison: Optional[SpeakerComparison] = None
    region_rollup: Optional[Dict[str, float]] = None
    tool_version: str
    errors: Dict[str, str] = Field(default_factory=dict)


class WorldGeometry(BaseModel):
    """Simplified country outlines: iso3 -> polygons -> rings -> (lon, lat)."""

    polygons: Dict[str, List[List[List[Tuple[float, float]]]]]

    def __contains__(self, iso3: str) -> bool:
        return iso3 in self.polygons
