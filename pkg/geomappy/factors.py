"""Socioeconomic factor model: design matrices, least squares and seeded cross-validation.

The target is the log entity mass of each country; features are log population,
log GDP, log GDP per capita, log land area and the population-weighted distance
to the countries where the language is spoken. Columns are standardized.

Fold assignment uses a splitmix64 generator driving a Fisher-Yates shuffle, so
folds are reproducible from the seed alone.

Copyright (c) 2026 geomappy contributors
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from sklearn.metrics import explained_variance_score, mean_absolute_error

from .errors import DesignError, MissingCentroidError, ParseError
from .models import models_v1 as models

logger = logging.getLogger(__name__)

EARTH_RADIUS_KM = 6371.0
FEATURES = ["pop", "gdp", "gdppc", "land", "geo"]
LOG_FEATURES = {"pop", "gdp", "gdppc", "land"}
FACTOR_COLUMNS = ["iso3", "pop", "gdp", "gdppc", "land_km2", "centroid_lat", "centroid_lon"]

MASK64 = (1 << 64) - 1


class Design(NamedTuple):
    X: np.ndarray
    y: np.ndarray
    countries: List[str]
    features: List[str]


def haversine(a: Tuple[float, float], b: Tuple[float, float], radius: float = EARTH_RADIUS_KM) -> float:
    """Great-circle distance in km between two (lat, lon) points in degrees."""
    lat1, lon1 = map(math.radians, a)
    lat2, lon2 = map(math.radians, b)
    h = math.sin((lat2 - lat1) / 2) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2
    return 2 * radius * math.asin(min(1.0, math.sqrt(h)))


def load_factor_table(path: str) -> models.FactorTable:
    """Reads the factor CSV (`iso3,pop,gdp,gdppc,land_km2,centroid_lat,centroid_lon`).

    Empty or nonpositive covariates are kept as missing and reported per row.
    """
    try:
        df = pd.read_csv(path, dtype={"iso3": str})
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as ex:
        raise ParseError(f"invalid factor table {path}: {ex}")

    missing_cols = [c for c in FACTOR_COLUMNS if c not in df.columns]
    if missing_cols:
        raise ParseError(f"factor table {path} lacks columns: {', '.join(missing_cols)}")

    df = df.astype({c: float for c in FACTOR_COLUMNS[1:]})
    rows = {}
    for record in df.to_dict(orient="records"):
        iso3 = str(record["iso3"]).strip()
        value = {k: (None if pd.isna(record[c]) else record[c]) for k, c in
                 (("pop", "pop"), ("gdp", "gdp"), ("gdppc", "gdppc"), ("land", "land_km2"))}
        lat, lon = record["centroid_lat"], record["centroid_lon"]
        centroid = None if pd.isna(lat) or pd.isna(lon) else (lat, lon)
        row = models.FactorRow(iso3=iso3, centroid=centroid, **value)
        if row.missing:
            logger.debug(f"{iso3} lacks covariates: {row.missing}")
        rows[iso3] = row
    return models.FactorTable(rows=rows)


def parse_features(expr: str) -> List[str]:
    """Parses `pop+gdp+geo` style feature lists; `all` selects every factor."""
    if expr.strip() == "all":
        return list(FEATURES)
    names = []
    for name in expr.split("+"):
        name = name.strip()
        if name not in FEATURES:
            raise DesignError(f"unknown feature '{name}', expected one of {FEATURES}")
        if name not in names:
            names.append(name)
    if not names:
        raise DesignError("no features selected")
    return names


def _centroid(iso3: str, table: models.FactorTable) -> Tuple[float, float]:
    row = table.rows.get(iso3)
    if row is None or row.centroid is None:
        raise MissingCentroidError(iso3)
    return row.centroid


def geo_feature(target_iso3: str, profile: models.LanguageProfile, factor_table: models.FactorTable) -> float:
    """Speaker-weighted mean distance (km) from the target to the profile countries.

    Raises:
        MissingCentroidError: The target or a profile country has no centroid.
    """
    target = _centroid(target_iso3, factor_table)
    total = math.fsum(profile.speakers.values())
    countries = profile.countries
    if total > 0:
        weights = {c: profile.speakers[c] / total for c in countries}
    else:
        weights = {c: 1.0 / len(countries) for c in countries}
    return math.fsum(weights[c] * haversine(target, _centroid(c, factor_table)) for c in countries)


def _standardize(X: np.ndarray, features: Sequence[str]) -> np.ndarray:
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    for name, s in zip(features, std):
        if s == 0:
            logger.warning(f"feature {name} is constant over the design rows")
    std = np.where(std == 0, 1.0, std)
    return (X - mean) / std


def build_design(
    dataset_map: models.DatasetMap,
    factor_table: models.FactorTable,
    profile: models.LanguageProfile,
    features: Sequence[str],
    target: str = "log1p",
    registry: Optional[models.CountryRegistry] = None,
) -> Design:
    """Builds the standardized design matrix and target vector.

    Args:
        dataset_map (DatasetMap): Entity mass per country.
        factor_table (FactorTable): Covariates per country.
        profile (LanguageProfile): Speaker countries for the distance feature.
        features (list): Subset of `FEATURES`.
        target (str, optional): "log1p" uses ln(1 + w) over all rows, "positive" uses ln(w)
            over countries with w > 0. Defaults to "log1p".
        registry (CountryRegistry, optional): Restricts rows to registry countries.

    Returns:
        Design: (X, y, countries, features); rows are ordered by iso3.

    Raises:
        DesignError: Unknown feature or target, or fewer than 2 usable rows.
    """
    features = list(features)
    unknown = [f for f in features if f not in FEATURES]
    if unknown or not features:
        raise DesignError(f"invalid features: {features}")
    if target not in ("log1p", "positive"):
        raise DesignError(f"unknown target mode: {target}")

    if "geo" in features:
        for iso3 in profile.countries:
            _centroid(iso3, factor_table)

    rows, ys, countries = [], [], []
    for iso3 in sorted(factor_table.rows):
        if registry is not None and registry.by_iso3(iso3) is None:
            continue
        row = factor_table.rows[iso3]
        weight = dataset_map.weights.get(iso3, 0.0)
        if target == "positive" and weight <= 0:
            continue

        values = []
        for name in features:
            if name == "geo":
                values.append(None if row.centroid is None else geo_feature(iso3, profile, factor_table) * 1e-3)
            else:
                raw = getattr(row, name)
                values.append(None if raw is None else math.log(raw))
        if any(v is None for v in values):
            logger.debug(f"skipping {iso3}, missing {[f for f, v in zip(features, values) if v is None]}")
            continue

        rows.append(values)
        ys.append(math.log1p(weight) if target == "log1p" else math.log(weight))
        countries.append(iso3)

    if len(rows) < 2:
        raise DesignError(f"need at least 2 usable rows, got {len(rows)}")

    X = _standardize(np.asarray(rows, dtype=float), features)
    return Design(X=X, y=np.asarray(ys, dtype=float), countries=countries, features=features)


def fit_ols(X: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, float]:
    """Ordinary least squares with intercept.

    Solved on centered data with an SVD-based solver; rank-deficient designs get
    the minimum-norm solution. A constant target yields zero slopes.

    Returns:
        (coefficients, intercept)
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0] or X.shape[0] == 0:
        raise DesignError(f"incompatible shapes X{X.shape} y{y.shape}")

    y_mean = float(y.mean())
    if np.ptp(y) == 0:
        return np.zeros(X.shape[1]), y_mean

    x_mean = X.mean(axis=0)
    beta, *_ = np.linalg.lstsq(X - x_mean, y - y_mean, rcond=None)
    return beta, float(y_mean - x_mean @ beta)


class SplitMix64:
    """64-bit splitmix generator."""

    def __init__(self, seed: int) -> None:
        self.state = seed & MASK64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def below(self, bound: int) -> int:
        # modulo bias is below 2^-40 for any realistic row count
        return self.next() % bound


def shuffled_indices(n: int, seed: int) -> List[int]:
    """Fisher-Yates permutation of range(n) driven by SplitMix64(seed)."""
    order = list(range(n))
    rng = SplitMix64(seed)
    for i in range(n - 1, 0, -1):
        j = rng.below(i + 1)
        order[i], order[j] = order[j], order[i]
    return order


def fold_indices(n: int, folds: int, seed: int) -> List[List[int]]:
    """Contiguous folds over the shuffled rows; the first n mod folds folds get one extra row."""
    order = shuffled_indices(n, seed)
    size, extra = divmod(n, folds)
    result, start = [], 0
    for f in range(folds):
        end = start + size + (1 if f < extra else 0)
        result.append(order[start:end])
        start = end
    return result


def _score_fold(X: np.ndarray, y: np.ndarray, test: List[int]) -> models.FoldScore:
    mask = np.zeros(len(y), dtype=bool)
    mask[test] = True
    beta, intercept = fit_ols(X[~mask], y[~mask])
    y_test = y[mask]
    pred = X[mask] @ beta + intercept

    mae = float(mean_absolute_error(y_test, pred))
    if np.var(y_test) == 0:
        return models.FoldScore(explained_variance=0.0, mae=mae, constant_target=True)
    return models.FoldScore(explained_variance=float(explained_variance_score(y_test, pred)), mae=mae)


def cross_validate(
    X: np.ndarray,
    y: np.ndarray,
    folds: int = 5,
    seed: int = 17,
    features: Optional[Sequence[str]] = None,
    workers: int = 1,
) -> models.RegressionResult:
    """K-fold cross-validation of `fit_ols` with seeded fold assignment.

    Args:
        X (np.ndarray): Design matrix (n x p).
        y (np.ndarray): Targets.
        folds (int, optional): Number of folds. Defaults to 5.
        seed (int, optional): Shuffle seed. Defaults to 17.
        features (list, optional): Column names for the coefficient map.
        workers (int, optional): Threads used to fit folds. Results keep fold order.

    Returns:
        RegressionResult: Per-fold scores, their means and coefficients fitted on all rows.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(y)
    if folds < 2:
        raise DesignError("folds must be >= 2")
    if n < folds:
        raise DesignError(f"need at least {folds} rows for {folds} folds, got {n}")
    names = list(features) if features is not None else [f"x{i}" for i in range(X.shape[1])]

    splits = fold_indices(n, folds, seed)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_fold = list(pool.map(lambda test: _score_fold(X, y, test), splits))
    else:
        per_fold = [_score_fold(X, y, test) for test in splits]

    constant = sum(s.constant_target for s in per_fold)
    if constant:
        logger.warning(f"{constant} folds had a constant held-out target")

    beta, intercept = fit_ols(X, y)
    return models.RegressionResult(
        features=names,
        coefficients={name: float(b) for name, b in zip(names, beta)},
        intercept=intercept,
        per_fold=per_fold,
        mean_explained_variance=math.fsum(s.explained_variance for s in per_fold) / folds,
        mean_mae=math.fsum(s.mae for s in per_fold) / folds,
        seed=seed,
        folds=folds,
        rows=n,
    )


def factor_sweep(
    datasets: Iterable[Tuple[models.DatasetMap, models.LanguageProfile]],
    factor_table: models.FactorTable,
    feature_sets: Iterable[Sequence[str]],
    folds: int = 5,
    seed: int = 17,
    target: str = "log1p",
    registry: Optional[models.CountryRegistry] = None,
    workers: int = 1,
) -> pd.DataFrame:
    """Cross-validates several feature sets and averages the scores over languages.

    Returns:
        pd.DataFrame: One row per feature set with `explained_variance`, `mae` and `languages`.
    """
    datasets = list(datasets)
    records: List[Dict] = []
    for features in feature_sets:
        scores = []
        for dataset_map, profile in datasets:
            try:
                design = build_design(dataset_map, factor_table, profile, features, target, registry)
                scores.append(cross_validate(design.X, design.y, folds, seed, design.features, workers))
            except DesignError as ex:
                logger.warning(f"skipping {dataset_map.language} for {'+'.join(features)}: {ex}")
        records.append(
            {
                "features": "+".join(features),
                "explained_variance": np.mean([s.mean_explained_variance for s in scores]) if scores else np.nan,
                "mae": np.mean([s.mean_mae for s in scores]) if scores else np.nan,
                "languages": len(scores),
            }
        )
    return pd.DataFrame.from_records(records, columns=["features", "explained_variance", "mae", "languages"])
