"""End-to-end tests of the geomappy command line.

Copyright 2026 (C) geomappy contributors
"""

import json
from unittest import mock

import pandas as pd
import pytest

from geomappy import __version__
from geomappy.cli import SUBCOMMANDS, run

SWAHILI_SPEAKERS = {"TZA": 61000000, "KEN": 21000000, "UGA": 3000000, "COD": 9000000, "RWA": 1000000}

FACTOR_CSV = (
    "iso3,pop,gdp,gdppc,land_km2,centroid_lat,centroid_lon\n"
    "TZA,61000000,75000000000,1200,885800,-6.3,34.8\n"
    "KEN,53000000,110000000000,2100,569140,0.2,37.9\n"
    "UGA,47000000,40000000000,850,200520,1.3,32.3\n"
    "COD,95000000,55000000000,580,2267050,-2.9,23.6\n"
    "RWA,13000000,11000000000,820,24670,-2.0,29.9\n"
    "USA,331000000,23000000000000,69000,9147420,39.8,-98.6\n"
    "DEU,83000000,4200000000000,51000,349360,51.2,10.4\n"
    "FRA,67000000,2900000000000,43000,547557,46.6,2.2\n"
    "POL,38000000,680000000000,18000,306130,52.0,20.0\n"
)


@pytest.fixture(autouse=True)
def clean_env(monkeypatch, tmp_path):
    for name in ("GEOMAPPY_KB_ENDPOINT", "GEOMAPPY_KB_TIMEOUT", "GEOMAPPY_KB_REMOTE"):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.setenv("GEOMAPPY_CACHE_DIR", str(tmp_path / "cache"))


@pytest.fixture
def profile_file(tmp_path):
    path = tmp_path / "swa.json"
    path.write_text(json.dumps({"language": "swa", "speakers": SWAHILI_SPEAKERS}))
    return path


@pytest.fixture
def swahili_conll(tmp_path):
    """100 one-token sentences: 10 in Tanzania, 7 in Kenya, 83 in the US"""
    links = ["Q924"] * 10 + ["Q114"] * 7 + ["Q30"] * 83
    path = tmp_path / "swa.conll"
    path.write_text("".join(f"Mahali\tB-LOC\t{qid}\n\n" for qid in links), encoding="utf-8")
    return path


def _stderr_error(capsys):
    err = capsys.readouterr().err.strip().splitlines()
    return json.loads(err[-1])


def _swahili_map(tmp_path, swahili_conll, *extra):
    mentions = tmp_path / "mentions.jsonl"
    map_path = tmp_path / "map.json"
    assert run(["ingest", "--format", "conll", "--lang", "swa", "--in", str(swahili_conll), "--out", str(mentions)]) == 0
    args = ["resolve", "--in", str(mentions), "--out", str(map_path), "--lang", "swa", "--corpus-id", "masakhaner"]
    assert run(args + list(extra)) == 0
    return map_path


def test_swahili_pipeline(tmp_path, swahili_conll, profile_file):
    map_path = _swahili_map(tmp_path, swahili_conll)
    dataset_map = json.loads(map_path.read_text())
    assert dataset_map["weights"] == {"KEN": 7.0, "TZA": 10.0, "USA": 83.0}
    assert dataset_map["mentions"] == 100

    report_path = tmp_path / "report.json"
    code = run(["report", "--in", str(map_path), "--profile", str(profile_file), "--reproducible",
                "--out", str(report_path)])
    assert code == 0
    report = json.loads(report_path.read_text())
    assert report["in_country_share"] == pytest.approx(0.17)
    assert report["unrepresented"]["count"] == 246
    assert report["errors"] == {}
    assert report["generated_at"] is None


def test_report_is_reproducible(tmp_path, swahili_conll, profile_file, capsys):
    map_path = _swahili_map(tmp_path, swahili_conll)
    capsys.readouterr()
    outputs = []
    for _ in range(2):
        assert run(["report", "--in", str(map_path), "--profile", str(profile_file), "--reproducible"]) == 0
        outputs.append(capsys.readouterr().out)
    assert outputs[0] == outputs[1]


def test_resolve_same_output_with_workers(tmp_path, snapshot_file):
    mentions = tmp_path / "mentions.jsonl"
    rows = []
    qids = ["Q619", "Q937", "Q900020", "Q900040", "Q924", "Q900030"]
    for i in range(60):
        rows.append({"unit_id": f"s{i}", "surface": "x", "span": [0, 1],
                     "candidates": [{"qid": qids[i % len(qids)], "score": 1.0}]})
    mentions.write_text("".join(json.dumps(r) + "\n" for r in rows))

    outputs = []
    for workers in ("1", "4"):
        out = tmp_path / f"map{workers}.json"
        assert run(["resolve", "--in", str(mentions), "--kb", str(snapshot_file), "--workers", workers,
                    "--out", str(out)]) == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]
    assert json.loads(outputs[0])["historical"] == 10


def test_resolve_entities_out(tmp_path, snapshot_file):
    mentions = tmp_path / "mentions.jsonl"
    mentions.write_text(
        '{"unit_id": "s1", "surface": "x", "span": [0, 1], "candidates": [{"qid": "Q937"}, {"qid": "Q619"}]}\n'
        '{"unit_id": "s2", "surface": "y", "span": [0, 1], "candidates": [{"qid": "Q404"}]}\n'
    )
    entities = tmp_path / "entities.csv"
    args = ["resolve", "--in", str(mentions), "--kb", str(snapshot_file), "--out", str(tmp_path / "map.json"),
            "--entities-out", str(entities)]
    assert run(args) == 0
    df = pd.read_csv(entities)
    assert list(df["qid"]) == ["Q937"]
    assert "claims.P19" in df.columns

    assert run(args + ["--top-k", "2"]) == 0
    assert sorted(pd.read_csv(entities)["qid"]) == ["Q619", "Q937"]


def test_resolve_with_links(tmp_path):
    conll = tmp_path / "spans.conll"
    conll.write_text("Dodoma\tB-LOC\n\nNairobi\tB-LOC\n")
    mentions = tmp_path / "mentions.jsonl"
    assert run(["ingest", "--format", "conll", "--in", str(conll), "--out", str(mentions)]) == 0
    links = tmp_path / "links.jsonl"
    links.write_text('{"unit_id": "s1", "surface": "Dodoma", "span": [0, 6], "candidates": [{"qid": "Q924", "score": 1}]}\n')

    out = tmp_path / "map.json"
    assert run(["resolve", "--in", str(mentions), "--links", str(links), "--out", str(out)]) == 0
    dataset_map = json.loads(out.read_text())
    assert dataset_map["weights"] == {"TZA": 1.0}
    assert dataset_map["unresolved"] == 1


def test_ingest_qa(tmp_path, capsys):
    path = tmp_path / "qa.json"
    path.write_text(json.dumps([{"id": "q1", "question": "Dodoma iko wapi?"}]))
    assert run(["ingest", "--format", "qa", "--lang", "swa", "--in", str(path)]) == 0
    unit = json.loads(capsys.readouterr().out)
    assert unit["unit_id"] == "q1"
    assert unit["language"] == "swa"


def test_compare_rbo_identical(tmp_path, capsys):
    ranking = tmp_path / "ranking.json"
    ranking.write_text(json.dumps(["USA", "TZA", "KEN"]))
    assert run(["compare", "--metric", "rbo", "--a", str(ranking), "--b", str(ranking), "--k", "2"]) == 0
    assert capsys.readouterr().out.strip() == "1.0"


def test_compare_rbo_profile_from_maps(tmp_path, capsys, swahili_map):
    path = tmp_path / "map.json"
    path.write_text(swahili_map.model_dump_json())
    other = tmp_path / "other.json"
    other.write_text(json.dumps(["TZA", "USA", "KEN"]))
    assert run(["compare", "--metric", "rbo", "--a", str(path), "--b", str(other), "--k", "1,3"]) == 0
    values = json.loads(capsys.readouterr().out)
    assert values["1"] == 0.0
    assert 0.0 < values["3"] < 1.0


def test_compare_agreement_and_el(tmp_path, capsys):
    a = tmp_path / "a.jsonl"
    b = tmp_path / "b.jsonl"
    a.write_text('{"unit_id": "u1", "qids": ["Q1", "Q2"]}\n')
    b.write_text('{"unit_id": "u1", "qids": ["Q2", "Q3"]}\n')
    assert run(["compare", "--metric", "agreement", "--a", str(a), "--b", str(b), "--k", "1,2"]) == 0
    result = json.loads(capsys.readouterr().out)
    assert result["1"]["common"] == 0
    assert result["2"]["ratio"] == 0.5

    pairs = tmp_path / "pairs.jsonl"
    pairs.write_text('{"pair_id": "p1", "src_qids": ["Q1", "Q2"], "tgt_qids": ["Q2"]}\n')
    assert run(["compare", "--metric", "el", "--pairs", str(pairs), "--k", "2"]) == 0
    assert json.loads(capsys.readouterr().out)["2"]["percentage"] == 50.0


def test_compare_agreement_on_linker_output(tmp_path, capsys):
    informed = tmp_path / "informed.jsonl"
    relaxed = tmp_path / "relaxed.jsonl"
    informed.write_text('{"unit_id": "u1", "surface": "Dodoma", "span": [0, 6], "candidates": [{"qid": "Q924"}]}\n')
    relaxed.write_text(
        '{"unit_id": "u1", "surface": "Dodoma", "span": [0, 6], "candidates": [{"qid": "Q924"}]}\n'
        '{"unit_id": "u1", "surface": "Nairobi", "span": [10, 17], "candidates": [{"qid": "Q3870"}]}\n'
    )
    assert run(["compare", "--metric", "agreement", "--a", str(informed), "--b", str(relaxed), "--k", "2"]) == 0
    result = json.loads(capsys.readouterr().out)["2"]
    assert result["common"] == 1
    assert result["relaxed_only"] == 1
    assert result["ratio"] == 0.5


def test_compare_prf(tmp_path, capsys):
    gold = tmp_path / "projected.conll"
    pred = tmp_path / "predicted.conll"
    gold.write_text("Juma\tB-PER\nalienda\tO\nDodoma\tB-LOC\n")
    pred.write_text("Juma\tB-PER\nalienda\tO\nDodoma\tB-ORG\n")
    assert run(["compare", "--metric", "prf", "--a", str(gold), "--b", str(pred)]) == 0
    assert json.loads(capsys.readouterr().out)["f1"] == 0.5


def test_compare_maps(tmp_path, capsys, swahili_map, profile_file):
    path = tmp_path / "map.json"
    path.write_text(swahili_map.model_dump_json())
    assert run(["compare", "--metric", "maps", "--a", str(path), "--b", str(path), "--profile", str(profile_file),
                "--k", "1,2"]) == 0
    result = json.loads(capsys.readouterr().out)
    assert result["share_delta"] == 0.0
    assert result["rbo"] == {"1": 1.0, "2": 1.0}


def test_compare_missing_argument(capsys):
    assert run(["compare", "--metric", "el"]) == 1
    assert "--pairs" in _stderr_error(capsys)["message"]


def test_factors_deterministic(tmp_path, capsys, swahili_map, profile_file):
    table = tmp_path / "factors.csv"
    table.write_text(FACTOR_CSV)
    path = tmp_path / "map.json"
    path.write_text(swahili_map.model_dump_json())
    args = ["factors", "--in", str(path), "--profile", str(profile_file), "--factor-table", str(table),
            "--features", "pop+geo", "--folds", "3", "--seed", "17"]

    assert run(args) == 0
    first = capsys.readouterr().out
    assert run(args) == 0
    assert capsys.readouterr().out == first

    result = json.loads(first)
    assert result["folds"] == 3
    assert len(result["per_fold"]) == 3
    assert result["countries"] == ["COD", "DEU", "FRA", "KEN", "POL", "RWA", "TZA", "UGA", "USA"]
    assert result["rows"] == 9


def test_factors_sweep(tmp_path, capsys, swahili_map, profile_file):
    table = tmp_path / "factors.csv"
    table.write_text(FACTOR_CSV)
    path = tmp_path / "map.json"
    path.write_text(swahili_map.model_dump_json())
    assert run(["factors", "--in", str(path), "--profile", str(profile_file), "--factor-table", str(table),
                "--features", "pop,geo,all", "--folds", "3"]) == 0
    records = json.loads(capsys.readouterr().out)
    assert [r["features"] for r in records] == ["pop", "geo", "pop+gdp+gdppc+land+geo"]
    assert all(r["languages"] == 1 for r in records)


def test_factors_unknown_feature(tmp_path, capsys, swahili_map, profile_file):
    table = tmp_path / "factors.csv"
    table.write_text(FACTOR_CSV)
    path = tmp_path / "map.json"
    path.write_text(swahili_map.model_dump_json())
    assert run(["factors", "--in", str(path), "--profile", str(profile_file), "--factor-table", str(table),
                "--features", "weather"]) == 1
    assert _stderr_error(capsys)["error"] == "DesignError"

    assert run(["factors", "--in", str(path), "--profile", str(profile_file), "--factor-table", str(table),
                "--features", "pop,,geo"]) == 1
    assert _stderr_error(capsys)["error"] == "ConfigError"


def test_render(tmp_path, swahili_map, profile_file):
    path = tmp_path / "map.json"
    path.write_text(swahili_map.model_dump_json())
    geometry = tmp_path / "world.geojson"
    geometry.write_text(json.dumps({
        "type": "FeatureCollection",
        "features": [{"type": "Feature", "properties": {"iso3": "TZA"},
                      "geometry": {"type": "Polygon", "coordinates": [[[30, -10], [40, -10], [40, 0], [30, -10]]]}}],
    }))
    svg, bars = tmp_path / "map.svg", tmp_path / "bars.svg"
    assert run(["render", "--in", str(path), "--geometry", str(geometry), "--out", str(svg),
                "--bars-out", str(bars), "--profile", str(profile_file)]) == 0
    assert 'data-iso3="TZA"' in svg.read_text()
    assert "ungeolocated" in svg.read_text()
    assert "bar-group" in bars.read_text()


def test_render_bars_need_profile(tmp_path, capsys, swahili_map):
    path = tmp_path / "map.json"
    path.write_text(swahili_map.model_dump_json())
    assert run(["render", "--in", str(path), "--bars-out", str(tmp_path / "bars.svg")]) == 1
    assert _stderr_error(capsys)["error"] == "ConfigError"


def test_regions(tmp_path, capsys, snapshot_file, swahili_map):
    scores = tmp_path / "scores.jsonl"
    scores.write_text('{"item_id": "q1", "score": 80}\n{"item_id": "q2", "score": 40}\n{"item_id": "q3", "score": 5}\n')
    mentions = tmp_path / "mentions.jsonl"
    mentions.write_text(
        '{"unit_id": "q1", "surface": "Dodoma", "span": [0, 6], "ner_label": "LOC", "candidates": [{"qid": "Q924", "score": 1}]}\n'
        '{"unit_id": "q2", "surface": "Copernicus", "span": [0, 10], "ner_label": "PER", "candidates": [{"qid": "Q619", "score": 1}]}\n'
    )
    map_path = tmp_path / "map.json"
    map_path.write_text(swahili_map.model_dump_json())

    assert run(["regions", "--scores", str(scores), "--in", str(mentions), "--kb", str(snapshot_file),
                "--map", str(map_path)]) == 0
    result = json.loads(capsys.readouterr().out)
    assert result["means"] == {"Africa": 80.0, "Europe": 40.0}
    assert result["macro_stdev"] == pytest.approx(20.0)
    assert result["excluded"] == 1
    assert result["region_shares"] == pytest.approx({"Africa": 0.17, "Americas": 0.83})


def test_missing_input_file(tmp_path, capsys):
    assert run(["report", "--in", str(tmp_path / "nope.json")]) == 1
    error = _stderr_error(capsys)
    assert error["error"] == "ConfigError"
    assert "nope.json" in error["message"]


def test_malformed_input(tmp_path, capsys):
    path = tmp_path / "bad.conll"
    path.write_text("a\tb\tc\td\n")
    assert run(["ingest", "--format", "conll", "--in", str(path)]) == 1
    error = _stderr_error(capsys)
    assert error["error"] == "ParseError"
    assert "line 1" in error["message"]


def test_usage_errors(capsys):
    assert run([]) == 1
    assert run(["frobnicate"]) == 1
    assert run(["compare", "--metric", "rbo", "--k", "x"]) == 1
    assert run(["compare", "--metric", "rbo", "--k", "0", "--a", "-", "--b", "-"]) == 1
    assert run(["--log-level", "LOUD", "report", "--in", "-"]) == 1


@pytest.mark.parametrize("command", SUBCOMMANDS)
def test_help(command, capsys):
    assert run([command, "--help"]) == 0
    assert "usage" in capsys.readouterr().out


def test_version(capsys):
    assert run(["--version"]) == 0
    assert __version__ in capsys.readouterr().out


def test_internal_error(tmp_path, capsys):
    ranking = tmp_path / "ranking.json"
    ranking.write_text("[]")
    with mock.patch("geomappy.cli.cmd_compare", side_effect=RuntimeError("boom")):
        assert run(["compare", "--metric", "rbo", "--a", str(ranking), "--b", str(ranking)]) == 2
    assert _stderr_error(capsys) == {"error": "RuntimeError", "message": "boom"}
