"""Tests for run comparison and cross-lingual consistency.

Copyright 2026 (C) geomappy contributors
"""

import io
import math
import random

import pytest

from geomappy.consistency import (
    agreement_at_k,
    agreement_profile,
    agreement_ratio,
    compare_maps,
    el_consistency,
    el_consistency_profile,
    extract_spans,
    projection_prf,
    rbo,
    rbo_profile,
    read_label_sentences,
    read_pairs_jsonl,
    read_run_jsonl,
    run_from_mentions,
)
from geomappy.errors import ParseError, RankingError
from geomappy.models.models_v1 import DatasetMap


@pytest.mark.parametrize(
    "common,relaxed_only,expected",
    [(4239, 761, 0.85), (9575, 425, 0.96), (6739, 13259, 0.34)],
)
def test_agreement_ratio_reported_values(common, relaxed_only, expected):
    assert round(agreement_ratio(common, relaxed_only), 2) == expected


def test_agreement_ratio_edges():
    assert agreement_ratio(0, 0) == 0.0
    assert agreement_ratio(3, 1, informed_total=6, denominator="informed") == 0.5
    with pytest.raises(ValueError):
        agreement_ratio(3, 1, denominator="informed")
    with pytest.raises(ValueError):
        agreement_ratio(3, 1, denominator="both")


def test_agreement_at_k():
    informed = {"u1": ["Q1", "Q2"], "u2": ["Q3"]}
    relaxed = {"u1": ["Q2", "Q1", "Q4"]}
    result = agreement_at_k(informed, relaxed, k=2)
    assert result.common == 2
    assert result.relaxed_only == 0
    assert result.informed_total == 3
    assert result.missing_units == 1
    assert result.ratio == 1.0
    assert agreement_at_k(informed, relaxed, k=2, denominator="informed").ratio == pytest.approx(2 / 3)


def test_agreement_profile_grows_with_k():
    informed = {"u1": ["Q1", "Q2", "Q3"]}
    relaxed = {"u1": ["Q9", "Q1", "Q3"]}
    profile = agreement_profile(informed, relaxed)
    assert [profile[k].common for k in (1, 2, 3)] == [0, 1, 2]
    with pytest.raises(ValueError):
        agreement_at_k(informed, relaxed, k=0)


def test_rbo_identical():
    ranking = ["USA", "TZA", "KEN", "GBR"]
    assert rbo(ranking, ranking) == 1.0
    assert rbo(ranking, list(ranking), k=2) == 1.0
    assert rbo(ranking, ranking + ["FRA"], k=4) == 1.0


def test_rbo_swapped_pair():
    assert rbo(["X", "Y"], ["Y", "X"], p=0.9, k=2) == pytest.approx(0.9)


def test_rbo_disjoint():
    assert rbo(["A", "B", "C"], ["D", "E", "F"]) == 0.0
    assert rbo(["A", "B", "C"], ["D", "E", "F"], variant="min") == 0.0


def test_rbo_empty_lists():
    assert rbo([], []) == 1.0
    assert rbo(["A"], []) == 0.0


def test_rbo_rejects_bad_input():
    with pytest.raises(RankingError):
        rbo(["A", "A"], ["A"])
    with pytest.raises(ValueError):
        rbo(["A"], ["A"], p=1.0)
    with pytest.raises(ValueError):
        rbo(["A"], ["A"], k=0)
    with pytest.raises(ValueError):
        rbo(["A"], ["A"], variant="max")


def test_rbo_properties_randomized():
    """Symmetric, bounded, and the lower bound never exceeds the extrapolation"""
    rng = random.Random(5)
    items = [f"C{i}" for i in range(15)]
    for _ in range(200):
        a = rng.sample(items, rng.randint(1, 10))
        b = rng.sample(items, rng.randint(1, 10))
        k = rng.randint(1, 10)
        ext = rbo(a, b, k=k)
        low = rbo(a, b, k=k, variant="min")
        assert 0.0 <= low <= ext <= 1.0
        assert rbo(b, a, k=k) == pytest.approx(ext)


def test_rbo_min_identical_is_truncated():
    ranking = ["A", "B", "C"]
    low = rbo(ranking, ranking, variant="min")
    assert low == pytest.approx((1 / 9) * (-2 * 0.9 - 0.5 * 0.81 + 3 * math.log(10)))
    assert low < 1.0


def test_rbo_profile():
    profile = rbo_profile(["A", "B", "C"], ["A", "C", "B"], ks=[1, 3])
    assert profile[1] == 1.0
    assert profile[3] < 1.0


def _pairs_19_91():
    source, target = {}, {}
    for i in range(10):
        source[f"p{i}"] = [f"Q{i}"]
        target[f"p{i}"] = []
    source["p0"], target["p0"] = ["Q1"], ["Q1"]
    big = [f"Q{1000 + j}" for j in range(1000)]
    source["p1"], target["p1"] = big, big[:991]
    return source, target


def test_el_consistency_reported_value():
    source, target = _pairs_19_91()
    score = el_consistency(source, target, k=1000)
    assert score.pairs == 10
    assert score.percentage == pytest.approx(19.91)


def test_el_consistency_skips_empty_sources():
    score = el_consistency({"a": [], "b": ["Q1"]}, {"a": ["Q1"], "b": ["Q1"]}, k=1)
    assert score.skipped == 1
    assert score.pairs == 1
    assert score.percentage == 100.0
    assert el_consistency({}, {}, k=1).percentage == 0.0


def test_el_consistency_profile():
    source = {"a": ["Q1", "Q2", "Q3"]}
    target = {"a": ["Q3"]}
    profile = el_consistency_profile(source, target, ks=(1, 3))
    assert profile[1].percentage == 0.0
    assert profile[3].percentage == pytest.approx(100 / 3)


def test_read_run_jsonl():
    text = '{"unit_id": "u1", "qids": ["Q1", "Q2", "Q1"]}\n\n{"unit_id": 7, "qids": []}\n'
    assert read_run_jsonl(io.StringIO(text)) == {"u1": ["Q1", "Q2"], "7": []}
    with pytest.raises(ParseError) as ex:
        read_run_jsonl(io.StringIO('{"unit_id": "u1", "qids": []}\n{"unit_id": "u2"}\n'))
    assert ex.value.line == 2


def test_read_run_jsonl_from_mentions():
    text = (
        '{"unit_id": "u1", "surface": "Dodoma", "span": [0, 6], "candidates": [{"qid": "Q924", "score": 0.9}]}\n'
        '{"unit_id": "u1", "surface": "Kenya", "span": [9, 14], "candidates": [{"qid": "Q114"}, {"qid": "Q924"}]}\n'
        '{"unit_id": "u2", "surface": "x", "span": [0, 1], "candidates": []}\n'
    )
    assert read_run_jsonl(io.StringIO(text)) == {"u1": ["Q924", "Q114"], "u2": []}
    with pytest.raises(ParseError) as ex:
        read_run_jsonl(io.StringIO('{"unit_id": "u1", "candidates": [{"qid": "Q1"}]}\n'))
    assert ex.value.line == 1


def test_read_pairs_jsonl():
    text = '{"pair_id": "p1", "src_qids": ["Q1", "Q1"], "tgt_qids": ["Q2"]}\n'
    source, target = read_pairs_jsonl(io.StringIO(text))
    assert source == {"p1": ["Q1"]}
    assert target == {"p1": ["Q2"]}


def test_run_from_mentions(make_mention):
    mentions = [make_mention("s1", ["Q1", "Q2"]), make_mention("s1", ["Q2", "Q3"]), make_mention("s2", [])]
    assert run_from_mentions(mentions) == {"s1": ["Q1", "Q2", "Q3"], "s2": []}


def test_extract_spans():
    assert extract_spans(["B-PER", "I-PER", "O", "B-LOC"]) == {(0, 2, "PER"), (3, 4, "LOC")}
    assert extract_spans(["S-ORG", "B-LOC", "E-LOC"]) == {(0, 1, "ORG"), (1, 3, "LOC")}
    assert extract_spans(["PER", "PER", "O", "LOC"]) == {(0, 2, "PER"), (3, 4, "LOC")}
    assert extract_spans(["B-LOC", "B-LOC"]) == {(0, 1, "LOC"), (1, 2, "LOC")}
    assert extract_spans([]) == set()


def test_projection_prf():
    gold = ["B-PER", "I-PER", "O", "B-LOC", "B-MISC"]
    pred = ["B-PER", "I-PER", "O", "B-ORG", "O"]
    score = projection_prf(gold, pred)
    assert (score.tp, score.fp, score.fn) == (1, 1, 1)
    assert score.precision == score.recall == score.f1 == 0.5


def test_projection_prf_sentences():
    gold = [["B-PER", "O"], ["B-LOC"]]
    score = projection_prf(gold, gold)
    assert score.tp == 2
    assert score.f1 == 1.0


def test_projection_prf_no_entities():
    score = projection_prf(["O", "O"], ["O", "O"])
    assert score.precision == score.recall == score.f1 == 0.0


def test_projection_prf_length_mismatch():
    with pytest.raises(ValueError):
        projection_prf(["O", "O"], ["O"])
    with pytest.raises(ValueError):
        projection_prf([["O"], ["O"]], [["O"]])


def test_read_label_sentences():
    text = "Nicolaus\tB-PER\nCopernicus\tI-PER\n\nToruń\tB-LOC\n"
    assert read_label_sentences(io.StringIO(text)) == [["B-PER", "I-PER"], ["B-LOC"]]


def test_compare_maps(swahili_map, swahili_profile):
    other = DatasetMap(corpus_id="masakhaner", language="swa", weights={"TZA": 50.0, "KEN": 10.0, "USA": 40.0})
    result = compare_maps(swahili_map, other, swahili_profile)
    assert result.share_a == pytest.approx(0.17)
    assert result.share_b == pytest.approx(0.6)
    assert result.share_delta == pytest.approx(0.43)
    assert result.top_a == ["USA", "TZA", "KEN"]
    assert result.top_b == ["TZA", "USA", "KEN"]
    assert result.rbo[1] == 0.0
    assert 0.0 < result.rbo[3] < 1.0


def test_compare_maps_without_profile(swahili_map):
    result = compare_maps(swahili_map, swahili_map)
    assert result.share_a is None and result.share_delta is None
    assert all(math.isclose(v, 1.0) for v in result.rbo.values())


def test_compare_maps_empty_map(swahili_map, swahili_profile):
    empty = DatasetMap(corpus_id="masakhaner", language="swa", weights={})
    result = compare_maps(swahili_map, empty, swahili_profile)
    assert result.share_delta is None
    assert result.top_b == []
