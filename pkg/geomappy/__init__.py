__version__ = "0.1.0"

import logging

try:
    from . import models
    from . import handlers
    from .errors import GeoMapError, ParseError, EmptyMapError, UnknownCountryError
    from .models.models_v1 import HISTORY, DatasetMap, LinkedMention, KbEntity, CountryRegistry
    from .ingest import parse_conll, parse_qa_json, parse_links_jsonl
    from .resolver import load_registry, resolve_place, resolve_entity, build_dataset_map
    from .stats import in_country_share, unrepresented, gini, bhattacharyya, speaker_comparison
    from .stats import region_rollup, region_performance, load_profile
    from .config import Settings, load_settings
    from .consistency import agreement_at_k, rbo, el_consistency, projection_prf
    from .handlers.handler_v1 import KnowledgeBase
except Exception as ex:
    logging.error(f"Error importing geomappy: {ex}")

try:
    # modules that need the numerical and rendering stack
    from .factors import geo_feature, build_design, fit_ols, cross_validate
    from .render import emit_report, emit_choropleth, emit_bars
    from . import client_v1
except Exception as ex:
    logging.error(f"Not all dependencies installed: {ex}")
