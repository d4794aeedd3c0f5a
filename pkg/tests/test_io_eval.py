import random

import pytest
from hypothesis import given, settings, strategies as st

from imatch.aligncore import ChunkedSentence
from imatch.classify import LabeledPair
from imatch.io_eval import (METRIC_TAG, WaDocument, WaEntry, WaFormatError, evaluate, format_wa,
                            parse_chunks, parse_wa, parse_wa_text, read_chunk_file, write_wa)

from docgen import random_document, relabel
from oracles import sent

MINIMAL = """<sentence id="1" status="">
// Demjanjuk dead
// Demjanjuk dies
<source>
1 Demjanjuk
2 dead
</source>
<translation>
1 Demjanjuk
2 dies
</translation>
<alignment>
1 <==> 1 // EQUI // 5 // Demjanjuk <==> Demjanjuk
2 <==> 2 // SIMI // 4 // dead <==> dies
</alignment>
</sentence>
"""


def test_parse_chunks():
    assert len(parse_chunks("[ Former Nazi death camp guard ] [ Demjanjuk ] [ dead ] [ at 91 ]")) == 4
    assert parse_chunks("[ a ]") == [["a"]]
    assert parse_chunks("[a b] [c]") == [["a", "b"], ["c"]]


@pytest.mark.parametrize("line,col", [("[ a ] [ b", "column 7"), ("a ]", "column 1"),
                                      ("[ a ] ]", "column 7"), ("[ [ a ]", "column 3")])
def test_parse_chunks_errors_name_column(line, col):
    with pytest.raises(WaFormatError, match=col):
        parse_chunks(line)


def test_read_chunk_file_reports_line(tmp_path):
    p = tmp_path / "s.txt"
    p.write_text("[ a ]\n[ b\n", encoding="utf-8")
    with pytest.raises(WaFormatError, match=":2:"):
        read_chunk_file(p)


def test_parse_minimal_plain_comments():
    doc = parse_wa_text(MINIMAL)
    assert len(doc.entries) == 1
    e = doc.entries[0]
    assert [p.type for p in e.pairs] == ["EQUI", "SIMI"]
    assert e.source.n_chunks == 2 and e.target.n_chunks == 2


def test_noali_target_only_record():
    text = MINIMAL.replace("2 <==> 2 // SIMI // 4 // dead <==> dies",
                           "2 <==> 0 // NOALI // NIL // dead <==> -not aligned-\n"
                           "0 <==> 2 // NOALI // NIL // -not aligned- <==> dies")
    e = parse_wa_text(text).entries[0]
    target_only = [p for p in e.pairs if not p.s1]
    assert target_only == [LabeledPair((), (2,), "NOALI", 0)]


@pytest.mark.parametrize("bad,match", [
    ("1 <==> 1 // EQUI // 5 // x", None),
    ("1 <==> 7 // EQUI // 5 // x", "out of range"),
    ("1 <==> 1 // EQUI // 9 // x", "score"),
    ("1 <==> 1 // WHAT // 5 // x", "relation type"),
    ("1 <==> 1 EQUI 5", "expected"),
])
def test_malformed_alignment_lines(bad, match):
    text = MINIMAL.replace("2 <==> 2 // SIMI // 4 // dead <==> dies", bad)
    with pytest.raises(WaFormatError, match="sentence 1"):
        parse_wa_text(text)
    if match:
        with pytest.raises(WaFormatError, match=match):
            parse_wa_text(text)


def test_partial_chunk_rejected():
    text = MINIMAL.replace("// Demjanjuk dead", "// [ Demjanjuk dead ]")
    with pytest.raises(WaFormatError, match="whole chunks"):
        parse_wa_text(text)


def test_write_then_parse(tmp_path):
    doc = parse_wa_text(MINIMAL)
    path = tmp_path / "x.wa"
    write_wa(doc, path)
    assert parse_wa(path) == doc


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**9))
def test_round_trip_random(seed):
    doc = random_document(random.Random(seed))
    back = parse_wa_text(format_wa(doc))
    assert back == doc
    for e in back.entries:
        e.check_totality()


def test_worked_partial_credit_example():
    s = sent("the red car")
    gold = WaDocument((WaEntry("1", s, s, (LabeledPair((1,), (1,), "EQUI", 5),)),))
    system = WaDocument((WaEntry("1", s, s, (LabeledPair((1,), (1,), "SIMI", 4),)),))
    rep = evaluate(gold, system)
    assert (rep.align_f1, rep.type_f1, rep.score_f1, rep.type_score_f1) == (1.0, 0.0, 0.8, 0.0)
    assert rep.line() == "1.0000 0.0000 0.8000 0.0000"
    assert rep.metric == METRIC_TAG


def test_self_and_empty():
    doc = parse_wa_text(MINIMAL)
    rep = evaluate(doc, doc)
    assert (rep.align_f1, rep.type_f1, rep.score_f1, rep.type_score_f1) == (1.0, 1.0, 1.0, 1.0)
    e = doc.entries[0]
    empty = WaDocument((WaEntry("1", e.source, e.target,
                                (LabeledPair((1,), (), "NOALI", 0), LabeledPair((2,), (), "NOALI", 0),
                                 LabeledPair((), (1,), "NOALI", 0), LabeledPair((), (2,), "NOALI", 0))),))
    rep = evaluate(doc, empty)
    assert (rep.align_f1, rep.type_f1, rep.score_f1, rep.type_score_f1) == (0.0, 0.0, 0.0, 0.0)


def test_id_mismatch():
    doc = parse_wa_text(MINIMAL)
    e = doc.entries[0]
    other = WaDocument((WaEntry("2", e.source, e.target, e.pairs),))
    with pytest.raises(ValueError, match="missing"):
        evaluate(doc, other)


def test_exclude_punct():
    s = ChunkedSentence.from_chunks([["dog", ","]])
    gold = WaDocument((WaEntry("1", s, s, (LabeledPair((1,), (1,), "EQUI", 5),)),))
    sys_ = WaDocument((WaEntry("1", s, s, (LabeledPair((1,), (1,), "SIMI", 5),)),))
    assert evaluate(gold, sys_).type_f1 == 0.0
    assert evaluate(gold, sys_, exclude_punct=True).type_f1 == 0.0
    assert evaluate(gold, gold, exclude_punct=True).align_f1 == 1.0


def test_ordering_invariants_200_pairs():
    rng = random.Random(2024)
    for _ in range(200):
        gold = random_document(rng)
        system = relabel(rng, gold)
        r = evaluate(gold, system)
        assert 0.0 <= r.type_score_f1 <= min(r.type_f1, r.score_f1) + 1e-15
        assert r.type_f1 <= r.align_f1 + 1e-15 and r.score_f1 <= r.align_f1 + 1e-15
        assert r.align_f1 <= 1.0
        assert evaluate(system, gold).align_f1 == r.align_f1
