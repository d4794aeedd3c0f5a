import numpy as np
import pytest

from imatch.lexres import (EmbeddingTable, Lexicon, ParaphraseTable, ResourceError, Resources,
                           TaxonomyGraph, link_taxonomic, load_lexicon)


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_symmetric_relations_closed(tmp_path):
    lex = load_lexicon(write(tmp_path, "syn.tsv", "car\tauto,automobile\nHot\tWarm\n"), "synonym")
    for w, rel in lex.entries.items():
        for r in rel:
            assert w in lex.related(r)
    assert lex.related("auto") == {"car"}
    assert lex.related("warm") == {"hot"}


def test_hypernym_hyponym_are_inverses(tmp_path):
    hyper = load_lexicon(write(tmp_path, "h.tsv", "dog\tanimal\ncat\tanimal\n"), "hypernym")
    hypo = load_lexicon(write(tmp_path, "o.tsv", "vehicle\tcar\n"), "hyponym")
    up, down = link_taxonomic(hyper, hypo)
    assert down.related("animal") == {"dog", "cat"}
    assert up.related("car") == {"vehicle"}
    for w, rel in up.entries.items():
        for r in rel:
            assert w in down.related(r)
    for w, rel in down.entries.items():
        for r in rel:
            assert w in up.related(r)


def test_lexicon_errors(tmp_path):
    with pytest.raises(ResourceError):
        load_lexicon(write(tmp_path, "bad.tsv", "no tab here\n"), "synonym")
    with pytest.raises(ResourceError):
        load_lexicon(write(tmp_path, "ok.tsv", "a\tb\n"), "meronym")


def test_loading_twice_is_identical(tmp_path):
    p = write(tmp_path, "syn.tsv", "b\ta,c\na\td\n")
    assert load_lexicon(p, "synonym") == load_lexicon(p, "synonym")


TAXONOMY = ("entity\tentity\tROOT\n"
            "animal\tanimal\tentity\n"
            "dog\tdog,hound\tanimal\n"
            "cat\tcat\tanimal\n"
            "rock\trock\tROOT\n")


def test_path_similarity(tmp_path):
    g = TaxonomyGraph.load(write(tmp_path, "tax.tsv", TAXONOMY))
    assert g.path_similarity("dog", "dog") == 1.0
    assert g.path_similarity("dog", "hound") == 1.0
    assert g.path_similarity("dog", "animal") == 0.5
    assert g.path_similarity("dog", "cat") == pytest.approx(1 / 3)
    assert g.path_similarity("dog", "rock") is None
    assert g.path_similarity("dog", "unicorn") is None
    for a in ("dog", "cat", "animal", "entity"):
        for b in ("dog", "cat", "animal", "entity"):
            assert g.path_similarity(a, b) == g.path_similarity(b, a)


def test_taxonomy_cycle_rejected(tmp_path):
    with pytest.raises(ResourceError):
        TaxonomyGraph.load(write(tmp_path, "cyc.tsv", "a\ta\tb\nb\tb\ta\n"))


def test_paraphrase_score(tmp_path):
    t = ParaphraseTable.load(write(tmp_path, "ppdb.tsv", "car\tauto\t0.9\n"))
    assert t.score("car", "auto") == 0.9
    assert t.score("auto", "car") == 0.9
    assert t.score("dog", "dog") == 1.0
    assert t.score("dog", "cat") == 0.0


def test_embeddings_case_insensitive(tmp_path):
    t = EmbeddingTable.load(write(tmp_path, "emb.txt", "2 3\nParis 1 0 0\ndog 0 1 0\n"))
    assert np.array_equal(t.embed("PARIS"), [1.0, 0.0, 0.0])
    assert len(t.embed("dog")) == t.dimension == 3
    assert t.embed("unicorn") is None


def test_resources_load_all(tmp_path):
    res = Resources.load(
        normalization=write(tmp_path, "n.tsv", "usa\tu.s.a\n"),
        synonym=write(tmp_path, "s.tsv", "car\tauto\n"),
        antonym=write(tmp_path, "a.tsv", "hot\tcold\n"),
        hypernym=write(tmp_path, "h.tsv", "dog\tanimal\n"),
        taxonomy=write(tmp_path, "t.tsv", TAXONOMY),
        ppdb=write(tmp_path, "p.tsv", "car\tauto\t0.9\n"),
        embeddings=write(tmp_path, "e.txt", "1 2\ncar 1 0\n"),
    )
    assert res.norm_map.get("usa", "") == "u.s.a"
    assert res.antonym.related("cold") == {"hot"}
    assert res.hyponym.related("animal") == {"dog"}
    assert isinstance(res.synonym, Lexicon)
