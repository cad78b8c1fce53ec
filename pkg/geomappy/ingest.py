"""Parsers for the corpus formats geomappy reads.

Supported inputs:
    - CoNLL-style NER files (`token<TAB>tag[<TAB>qid]`, blank line between sentences)
    - QA datasets as JSON documents (flat lists or SQuAD-style nesting) or JSON-lines
    - entity-linker output in the links-jsonl interchange format

All parsers are pure functions of their input and return a `ParseResult`
holding the parsed units/mentions plus tallies of recoverable problems.

Copyright (c) 2026 geomappy contributors
"""

import json
import logging
from typing import Any, Dict, IO, Iterable, Iterator, List, Optional, Tuple, Union

from pydantic import ValidationError

from .errors import ParseError
from .models import models_v1 as models

logger = logging.getLogger(__name__)

# third-column values that mean "no link"
EMPTY_LINKS = {"", "_", "-", "O", "NIL"}

TextSource = Union[str, IO[str], Iterable[str]]


def _lines(stream: TextSource) -> Iterator[str]:
    if isinstance(stream, str):
        return iter(stream.splitlines())
    return iter(stream)


def _read_all(stream: TextSource) -> str:
    if isinstance(stream, str):
        return stream
    if hasattr(stream, "read"):
        return stream.read()
    return "".join(stream)


def iter_conll_sentences(stream: TextSource) -> Iterator[List[Tuple[str, str, Optional[str], int]]]:
    """Yields the sentences of a CoNLL file as lists of (token, tag, qid, line number)."""
    sentence: List[Tuple[str, str, Optional[str], int]] = []
    for lineno, raw in enumerate(_lines(stream), start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            if sentence:
                yield sentence
                sentence = []
            continue

        cols = line.split("\t")
        if cols[0] == "-DOCSTART-":
            continue
        if len(cols) not in (2, 3):
            raise ParseError(f"expected 2 or 3 tab-separated columns, got {len(cols)}", line=lineno)

        token, tag = cols[0].strip(), cols[1].strip()
        if not token:
            raise ParseError("empty token", line=lineno)
        qid = None
        if len(cols) == 3 and cols[2].strip() not in EMPTY_LINKS:
            qid = cols[2].strip()
            if not models.is_qid(qid):
                raise ParseError(f"invalid qid in link column: {qid}", line=lineno)
        sentence.append((token, tag, qid, lineno))

    if sentence:
        yield sentence


def _split_tag(tag: str, lineno: int) -> Tuple[str, Optional[str]]:
    """Splits a tag into (prefix, type); `O` yields ("O", None)."""
    if tag == "O":
        return "O", None
    prefix, sep, label = tag.partition("-")
    if not sep or prefix not in ("B", "I", "E", "S") or not label:
        raise ParseError(f"unsupported tag: {tag}", line=lineno)
    return prefix, label


def parse_conll(stream: TextSource, language: str, corpus_id: str = "corpus") -> models.ParseResult:
    """Parses a CoNLL NER file into text units and span-only mentions.

    Sentence text is the tokens joined by single spaces; mention spans are
    character offsets into that text. An I- tag that does not continue a mention
    of the same type opens a new one and is counted as a warning.

    Args:
        stream: File object, iterable of lines or the raw text.
        language (str): Language code stored on every unit.
        corpus_id (str, optional): Corpus identifier. Defaults to "corpus".

    Returns:
        ParseResult with units, mentions and the `warnings` tally.
    """
    result = models.ParseResult()

    for index, sentence in enumerate(iter_conll_sentences(stream), start=1):
        unit_id = f"s{index}"
        tokens = [tok for tok, _, _, _ in sentence]
        offsets = []
        pos = 0
        for tok in tokens:
            offsets.append(pos)
            pos += len(tok) + 1
        text = " ".join(tokens)
        result.units.append(models.TextUnit(corpus_id=corpus_id, unit_id=unit_id, language=language, text=text))

        # open mention: [label, first token, last token, qid]
        current: Optional[list] = None

        def close():
            nonlocal current
            if current is None:
                return
            label, first, last, qid = current
            start, end = offsets[first], offsets[last] + len(tokens[last])
            candidates = [models.Candidate(qid=qid, score=1.0, rank=1)] if qid else []
            result.mentions.append(
                models.LinkedMention(
                    unit_id=unit_id,
                    surface=text[start:end],
                    span=(start, end),
                    ner_label=models.NerLabel.from_tag(label),
                    candidates=candidates,
                )
            )
            current = None

        for i, (_, tag, qid, lineno) in enumerate(sentence):
            prefix, label = _split_tag(tag, lineno)
            if prefix == "O":
                close()
                continue

            continues = current is not None and current[0] == label and prefix in ("I", "E")
            if continues:
                current[2] = i
                current[3] = current[3] or qid
            else:
                if prefix in ("I", "E"):
                    result.warnings += 1
                    logger.warning(f"{tag} without preceding B-{label} (line {lineno}), treated as B-{label}")
                close()
                current = [label, i, i, qid]

            if prefix in ("E", "S"):
                close()
        close()

    return result


def _json_error_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


def _iter_qa_records(doc: Any) -> Iterator[Dict[str, Any]]:
    """Walks flat lists, single records and SQuAD/TyDi-style `data/paragraphs/qas` nesting."""
    if isinstance(doc, list):
        for item in doc:
            yield from _iter_qa_records(item)
    elif isinstance(doc, dict):
        if "data" in doc and isinstance(doc["data"], list):
            yield from _iter_qa_records(doc["data"])
        elif "paragraphs" in doc:
            yield from _iter_qa_records(doc["paragraphs"])
        elif "qas" in doc:
            yield from _iter_qa_records(doc["qas"])
        else:
            yield doc
    else:
        # scalars are not records, they still count as skipped
        yield {}


def _load_json_records(text: str) -> Iterator[Dict[str, Any]]:
    stripped = text.strip()
    if not stripped:
        return iter(())
    try:
        return _iter_qa_records(json.loads(text))
    except json.JSONDecodeError as ex:
        if not ex.msg.startswith("Extra data"):
            raise ParseError(f"invalid JSON: {ex.msg}", offset=_json_error_offset(text, ex.pos))

    # json-lines
    records = []
    base = 0
    for line in text.splitlines(keepends=True):
        if line.strip():
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as ex:
                raise ParseError(
                    f"invalid JSON: {ex.msg}", offset=_json_error_offset(text, base) + _json_error_offset(line, ex.pos)
                )
        base += len(line)
    return _iter_qa_records(records)


def parse_qa_json(
    stream: TextSource,
    text_field: str = "question",
    language: str = "und",
    corpus_id: str = "corpus",
    id_field: str = "id",
    dedupe: bool = False,
) -> models.ParseResult:
    """Parses QA records (questions only) into text units.

    Records lacking the text field or an id are skipped and counted, as are
    repeated ids. With `dedupe` set, repeated question texts are skipped too.

    Raises:
        ParseError: The input is not valid JSON or JSON-lines (carries the byte offset).
    """
    text = _read_all(stream)
    result = models.ParseResult()
    seen_ids = set()
    seen_texts = set()

    for record in _load_json_records(text):
        value = record.get(text_field) if isinstance(record, dict) else None
        rec_id = record.get(id_field) if isinstance(record, dict) else None
        if not isinstance(value, str) or not value.strip() or rec_id is None:
            result.skipped += 1
            logger.debug(f"skipping record without '{text_field}' or '{id_field}': {record!r:.80}")
            continue

        rec_id = str(rec_id)
        if rec_id in seen_ids:
            result.skipped += 1
            logger.warning(f"duplicate record id {rec_id} skipped")
            continue
        if dedupe and value in seen_texts:
            result.skipped += 1
            continue

        seen_ids.add(rec_id)
        seen_texts.add(value)
        result.units.append(models.TextUnit(corpus_id=corpus_id, unit_id=rec_id, language=language, text=value))

    if result.skipped:
        logger.warning(f"{result.skipped} QA records skipped")
    return result


def parse_links_jsonl(stream: TextSource, allow_empty: bool = False) -> models.ParseResult:
    """Parses entity-linker output in the links-jsonl format.

    Candidates are ranked 1..n in the order listed. Records with malformed
    qids, or with no candidates (unless `allow_empty`), are rejected and counted.
    A single top-level JSON array is accepted as well.

    Raises:
        ParseError: A line is not valid JSON.
    """
    text = _read_all(stream)
    result = models.ParseResult()

    if text.lstrip().startswith("["):
        try:
            numbered = [(None, rec) for rec in json.loads(text)]
        except json.JSONDecodeError as ex:
            raise ParseError(f"invalid JSON: {ex.msg}", offset=_json_error_offset(text, ex.pos))
    else:
        numbered = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                numbered.append((lineno, json.loads(line)))
            except json.JSONDecodeError as ex:
                raise ParseError(f"invalid JSON: {ex.msg}", line=lineno)

    for lineno, record in numbered:
        if not isinstance(record, dict) or (not record.get("candidates") and not allow_empty):
            result.rejected += 1
            logger.warning(f"rejected link record without candidates (line {lineno})")
            continue
        try:
            result.mentions.append(models.LinkedMention.from_dict(record))
        except (KeyError, TypeError, ValueError, ValidationError) as ex:
            result.rejected += 1
            logger.warning(f"rejected link record (line {lineno}): {ex}")

    return result


def write_links_jsonl(mentions: Iterable[models.LinkedMention], stream: IO[str]) -> int:
    """Writes mentions as links-jsonl, returns the number of records written."""
    count = 0
    for mention in mentions:
        stream.write(json.dumps(mention.to_record(), ensure_ascii=False) + "\n")
        count += 1
    return count


def write_units_jsonl(units: Iterable[models.TextUnit], stream: IO[str]) -> int:
    count = 0
    for unit in units:
        stream.write(json.dumps(unit.model_dump(), ensure_ascii=False) + "\n")
        count += 1
    return count


def merge_links(
    mentions: Iterable[models.LinkedMention], links: Iterable[models.LinkedMention]
) -> List[models.LinkedMention]:
    """Attaches candidates from linker output to span-only mentions keyed by (unit_id, span)."""
    by_key = {(m.unit_id, tuple(m.span)): m.candidates for m in links}
    merged = []
    for mention in mentions:
        candidates = by_key.get((mention.unit_id, tuple(mention.span)))
        if candidates and not mention.candidates:
            mention = mention.model_copy(update={"candidates": candidates})
        merged.append(mention)
    return merged
