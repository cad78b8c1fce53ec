"""Report documents and SVG graphics for dataset maps.

Maps use an equirectangular projection of simplified Natural Earth outlines.

Copyright (c) 2026 geomappy contributors
"""

import json
import logging
import math
import os
import xml.etree.ElementTree as ET
from datetime import datetime, timezone
from typing import Dict, IO, List, Optional, Union

import matplotlib
from matplotlib.colors import to_hex
import requests

from . import __version__
from .config import DEFAULT_CACHE_DIR
from .errors import GeoMapError, ParseError
from .models import models_v1 as models
from . import stats

logger = logging.getLogger(__name__)

NATURAL_EARTH_URL = (
    "https://raw.githubusercontent.com/nvkelso/natural-earth-vector/master/geojson/"
    "ne_110m_admin_0_countries.geojson"
)
GEOMETRY_CACHE_FILE = "ne_110m_admin_0_countries.geojson"
ISO3_PROPERTIES = ("iso3", "ISO_A3", "ADM0_A3")

# registry codes Natural Earth 1:110m draws as part of a neighbour or not at all
GEOMETRY_EXCEPTIONS = {
    "AND", "ATG", "BHR", "BRB", "COM", "CPV", "DMA", "FRO", "FSM", "GIB", "GRD", "HKG", "IMN", "KIR", "KNA",
    "LCA", "LIE", "MAC", "MCO", "MDV", "MHL", "MLT", "MUS", "NRU", "PLW", "SGP", "SMR", "STP", "SYC", "TON",
    "TUV", "VAT", "VCT", "WSM", "XKX",
    # territories
    "ABW", "AIA", "ALA", "ASM", "BES", "BLM", "BMU", "BVT", "CCK", "COK", "CUW", "CXR", "CYM", "GGY", "GLP",
    "GUF", "GUM", "HMD", "IOT", "JEY", "MAF", "MNP", "MSR", "MTQ", "MYT", "NFK", "NIU", "PCN", "PYF", "REU",
    "SGS", "SHN", "SJM", "SPM", "SXM", "TCA", "TKL", "UMI", "VGB", "VIR", "WLF",
}

SVG_NS = "http://www.w3.org/2000/svg"
ABSENT_COLOR = "#dddddd"
MAP_SCALE = 2.0
MAP_WIDTH = 360 * MAP_SCALE
MAP_HEIGHT = 180 * MAP_SCALE
LEGEND_HEIGHT = 70
LEGEND_BREAKS = 5


# ------------------------------------------------------------------ report


def _utc_now() -> str:
    return datetime.now(timezone.utc).replace(microsecond=0).isoformat().replace("+00:00", "Z")


def emit_report(
    dataset_map: models.DatasetMap,
    profile: Optional[models.LanguageProfile] = None,
    registry: Optional[models.CountryRegistry] = None,
    threshold: float = 0.0,
    restricted_gini: bool = False,
    reproducible: bool = False,
) -> models.Report:
    """Collects the representativeness statistics of a map into a report.

    A statistic that cannot be computed is set to null and its error is noted
    under `errors`, the rest of the report is still produced.

    Args:
        dataset_map (DatasetMap): The map to report on.
        profile (LanguageProfile, optional): Needed for in-country share and speaker comparison.
        registry (CountryRegistry, optional): Needed for unrepresented countries, gini and region rollup.
        threshold (float, optional): Weight at or below which a country is unrepresented.
        restricted_gini (bool, optional): Compute gini over the map's countries only.
        reproducible (bool, optional): Leave `generated_at` empty.

    Returns:
        Report
    """
    errors: Dict[str, str] = {}
    values: Dict[str, object] = {}
    empty = dataset_map.total_weight <= 0

    def attempt(field: str, needs: Optional[str], compute):
        if empty:
            errors[field] = "empty map"
        elif needs is not None:
            errors[field] = f"no {needs} given"
        else:
            try:
                values[field] = compute()
                return
            except GeoMapError as ex:
                errors[field] = str(ex)
        values[field] = None

    no_profile = "profile" if profile is None else None
    no_registry = "registry" if registry is None else None
    attempt("in_country_share", no_profile, lambda: stats.in_country_share(dataset_map, profile))
    attempt(
        "unrepresented", no_registry, lambda: stats.unrepresented(dataset_map, registry.universe, threshold)
    )
    attempt(
        "gini",
        None if restricted_gini else no_registry,
        lambda: stats.gini(dataset_map, None if restricted_gini else registry.universe, restricted=restricted_gini),
    )
    attempt("speaker_comparison", no_profile, lambda: stats.speaker_comparison(dataset_map, profile))
    attempt("region_rollup", no_registry, lambda: stats.region_rollup(dataset_map, registry))

    for field, message in errors.items():
        logger.info(f"report field {field} left empty: {message}")

    return models.Report(
        corpus_id=dataset_map.corpus_id,
        language=dataset_map.language,
        generated_at=None if reproducible else _utc_now(),
        totals=models.ReportTotals(
            mentions=dataset_map.mentions,
            resolved=dataset_map.resolved,
            historical=dataset_map.historical,
            unresolved=dataset_map.unresolved,
        ),
        country_weights=dict(sorted(dataset_map.weights.items())),
        tool_version=__version__,
        errors=errors,
        **values,
    )


def report_json(report: models.Report) -> str:
    """Sorted-key JSON of a report."""
    return json.dumps(report.model_dump(mode="json"), sort_keys=True, ensure_ascii=False, indent=2) + "\n"


def write_report(report: models.Report, target: Union[str, IO[str]]) -> None:
    if isinstance(target, str):
        with open(target, "w", encoding="utf-8") as f:
            f.write(report_json(report))
    else:
        target.write(report_json(report))


# ---------------------------------------------------------------- geometry


def _rings(geometry: dict) -> List[List[List[tuple]]]:
    kind = geometry.get("type")
    coords = geometry.get("coordinates") or []
    if kind == "Polygon":
        polygons = [coords]
    elif kind == "MultiPolygon":
        polygons = coords
    else:
        return []
    return [[[(float(pt[0]), float(pt[1])) for pt in ring] for ring in polygon] for polygon in polygons]


def parse_geometry(doc: dict) -> models.WorldGeometry:
    """Reads a GeoJSON FeatureCollection keyed by an `iso3` (or Natural Earth ISO) property."""
    if doc.get("type") != "FeatureCollection":
        raise ParseError("geometry must be a GeoJSON FeatureCollection")

    polygons: Dict[str, list] = {}
    for feature in doc.get("features", []):
        props = feature.get("properties") or {}
        iso3 = next((props[k] for k in ISO3_PROPERTIES if props.get(k) not in (None, "", "-99")), None)
        if iso3 is None:
            continue
        rings = _rings(feature.get("geometry") or {})
        if rings:
            polygons.setdefault(str(iso3), []).extend(rings)
    return models.WorldGeometry(polygons=polygons)


def download_geometry(cache_dir: str = DEFAULT_CACHE_DIR, url: str = NATURAL_EARTH_URL, timeout: float = 60) -> dict:
    """Returns the Natural Earth 1:110m countries, downloading them once into the cache."""
    path = os.path.join(cache_dir, GEOMETRY_CACHE_FILE)
    if os.path.exists(path):
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)

    logger.info(f"downloading country outlines from {url}")
    res = requests.get(url, timeout=timeout)
    res.raise_for_status()
    doc = res.json()

    os.makedirs(cache_dir, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f)
    return doc


def load_geometry(path: Optional[str] = None, cache_dir: str = DEFAULT_CACHE_DIR) -> models.WorldGeometry:
    """Loads outlines from a GeoJSON file, or the cached Natural Earth download without one."""
    if path is None:
        return parse_geometry(download_geometry(cache_dir))
    with open(path, "r", encoding="utf-8") as f:
        try:
            return parse_geometry(json.load(f))
        except json.JSONDecodeError as ex:
            raise ParseError(f"invalid geometry {path}: {ex.msg}", offset=ex.pos)


def missing_geometry(geometry: models.WorldGeometry, registry: models.CountryRegistry) -> List[str]:
    """Registry countries without outlines that are not documented exceptions."""
    return [iso3 for iso3 in registry.universe if iso3 not in geometry and iso3 not in GEOMETRY_EXCEPTIONS]


# --------------------------------------------------------------------- svg


def _svg(width: float, height: float) -> ET.Element:
    return ET.Element(
        "svg",
        {
            "xmlns": SVG_NS,
            "version": "1.1",
            "width": f"{width:g}",
            "height": f"{height:g}",
            "viewBox": f"0 0 {width:g} {height:g}",
        },
    )


def _serialize(root: ET.Element) -> str:
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="unicode") + "\n"


def _project(lon: float, lat: float) -> str:
    return f"{(lon + 180.0) * MAP_SCALE:.2f},{(90.0 - lat) * MAP_SCALE:.2f}"


def _path_data(polygons) -> str:
    parts = []
    for polygon in polygons:
        for ring in polygon:
            if len(ring) < 3:
                continue
            parts.append("M" + " L".join(_project(lon, lat) for lon, lat in ring) + " Z")
    return " ".join(parts)


def intensity(weight: float, max_weight: float, color_scale: str = "log") -> float:
    """Maps a weight to [0, 1]; monotone in the weight for both scales."""
    if weight <= 0 or max_weight <= 0:
        return 0.0
    if color_scale == "log":
        return math.log1p(weight) / math.log1p(max_weight)
    if color_scale == "linear":
        return weight / max_weight
    raise ValueError(f"unknown color scale: {color_scale}")


def _fill(value: float, cmap: str = "Reds") -> str:
    # keep the lightest shades distinguishable from the absent color
    return to_hex(matplotlib.colormaps[cmap](0.15 + 0.85 * value))


def _breaks(max_weight: float, color_scale: str) -> List[float]:
    steps = [(i + 1) / LEGEND_BREAKS for i in range(LEGEND_BREAKS)]
    if color_scale == "log":
        return [math.expm1(s * math.log1p(max_weight)) for s in steps]
    return [s * max_weight for s in steps]


def emit_choropleth(
    dataset_map: models.DatasetMap, geometry: models.WorldGeometry, color_scale: str = "log"
) -> str:
    """Renders the map as a standalone SVG choropleth.

    Every country of the geometry gets a `<g class="country">` with its weight and
    intensity as data attributes. Weighted countries without outlines are listed
    in the legend as ungeolocated.

    Args:
        dataset_map (DatasetMap): Weights to draw.
        geometry (WorldGeometry): Outlines keyed by iso3.
        color_scale (str, optional): "log" or "linear". Defaults to "log".

    Returns:
        str: The SVG document.
    """
    if color_scale not in ("log", "linear"):
        raise ValueError(f"unknown color scale: {color_scale}")

    weights = dataset_map.weights
    max_weight = max(weights.values(), default=0.0)
    root = _svg(MAP_WIDTH, MAP_HEIGHT + LEGEND_HEIGHT)
    ET.SubElement(root, "title").text = f"{dataset_map.corpus_id} ({dataset_map.language})"
    ET.SubElement(root, "rect", {"class": "sea", "x": "0", "y": "0", "width": f"{MAP_WIDTH:g}",
                                 "height": f"{MAP_HEIGHT:g}", "fill": "#ffffff"})

    layer = ET.SubElement(root, "g", {"id": "countries"})
    for iso3 in sorted(geometry.polygons):
        weight = weights.get(iso3, 0.0)
        value = intensity(weight, max_weight, color_scale)
        fill = _fill(value) if weight > 0 else ABSENT_COLOR
        group = ET.SubElement(
            layer,
            "g",
            {
                "id": f"country-{iso3}",
                "class": "country" if weight > 0 else "country absent",
                "data-iso3": iso3,
                "data-weight": f"{weight:.6f}",
                "data-intensity": f"{value:.6f}",
                "fill": fill,
            },
        )
        ET.SubElement(group, "title").text = f"{iso3}: {weight:.6g}"
        ET.SubElement(group, "path", {"d": _path_data(geometry.polygons[iso3]), "stroke": "#ffffff",
                                      "stroke-width": "0.3"})

    legend = ET.SubElement(root, "g", {"id": "legend", "transform": f"translate(10,{MAP_HEIGHT + 10:g})"})
    if max_weight > 0:
        for i, value in enumerate(_breaks(max_weight, color_scale)):
            step = (i + 1) / LEGEND_BREAKS
            ET.SubElement(legend, "rect", {"class": "legend-break", "x": f"{i * 60}", "y": "0", "width": "60",
                                           "height": "12", "fill": _fill(step), "data-value": f"{value:.6f}"})
            ET.SubElement(legend, "text", {"x": f"{i * 60 + 60}", "y": "26", "font-size": "9",
                                           "text-anchor": "end"}).text = f"{value:.3g}"
    ET.SubElement(legend, "rect", {"class": "legend-absent", "x": f"{LEGEND_BREAKS * 60 + 20}", "y": "0",
                                   "width": "12", "height": "12", "fill": ABSENT_COLOR})
    ET.SubElement(legend, "text", {"x": f"{LEGEND_BREAKS * 60 + 36}", "y": "10", "font-size": "9"}).text = "absent"

    ungeolocated = sorted(iso3 for iso3, w in weights.items() if w > 0 and iso3 not in geometry)
    if ungeolocated:
        logger.warning(f"no outlines for weighted countries: {ungeolocated}")
        ET.SubElement(
            legend,
            "text",
            {"class": "ungeolocated", "x": "0", "y": "46", "font-size": "9",
             "data-iso3": " ".join(ungeolocated)},
        ).text = "ungeolocated: " + ", ".join(f"{c} ({weights[c]:.3g})" for c in ungeolocated)

    return _serialize(root)


def emit_bars(comparison: models.SpeakerComparison, top_k: int = 10) -> str:
    """Grouped bars of dataset share (red) against speaker share (green).

    Countries are ordered by dataset share (ties by iso3) and cut to `top_k`.
    Each bar carries its share as `data-value`.
    """
    if top_k < 1:
        raise ValueError("top_k must be >= 1")

    countries = sorted(comparison.countries, key=lambda c: (-comparison.entity_share.get(c, 0.0), c))[:top_k]
    group_width, bar_width, plot_height, margin = 60, 22, 200, 30
    width = max(group_width * len(countries), 240) + 2 * margin
    height = plot_height + 2 * margin + 20
    root = _svg(width, height)

    if not countries:
        ET.SubElement(root, "text", {"class": "message", "x": f"{width / 2:g}", "y": f"{height / 2:g}",
                                     "text-anchor": "middle"}).text = "no countries to compare"
        return _serialize(root)

    series = [
        ("dataset-share", comparison.entity_share, _fill(0.7, "Reds")),
        ("speaker-share", comparison.speaker_share, _fill(0.7, "Greens")),
    ]
    base = margin + plot_height
    for i, iso3 in enumerate(countries):
        group = ET.SubElement(root, "g", {"class": "bar-group", "data-iso3": iso3})
        x0 = margin + i * group_width + (group_width - 2 * bar_width) / 2
        for j, (name, shares, color) in enumerate(series):
            value = shares.get(iso3, 0.0)
            bar_height = value * plot_height
            ET.SubElement(
                group,
                "rect",
                {
                    "class": f"bar {name}",
                    "x": f"{x0 + j * bar_width:.2f}",
                    "y": f"{base - bar_height:.2f}",
                    "width": f"{bar_width}",
                    "height": f"{bar_height:.2f}",
                    "fill": color,
                    "data-value": f"{value:.6f}",
                },
            )
        ET.SubElement(group, "text", {"x": f"{x0 + bar_width:.2f}", "y": f"{base + 14}", "font-size": "10",
                                      "text-anchor": "middle"}).text = iso3

    legend = ET.SubElement(root, "g", {"id": "legend"})
    for j, (name, _, color) in enumerate(series):
        ET.SubElement(legend, "rect", {"x": f"{margin + j * 110}", "y": "8", "width": "10", "height": "10",
                                       "fill": color})
        ET.SubElement(legend, "text", {"x": f"{margin + j * 110 + 14}", "y": "17", "font-size": "10"}).text = name
    return _serialize(root)
