import gzip

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smnorms.errors import NormDataError
from smnorms.normdata import (
    ACTION, CLASSICAL_SENSES, DIMENSIONS, EMBODIMENT, PERCEPTUAL, Dimension, NormEntry,
    NormLexicon, intersect, load_embeddings, load_external_norms, load_lexical_decision,
    load_norms, load_raw_responses, normalize_pos, parse_dimension, write_norms,
)

from synth import BREAKFAST, synthetic_ratings, synthetic_words, write_norms_csv, write_raw_csv

HEADER = "word," + ",".join(d.key for d in DIMENSIONS) + "\n"


def test_dimension_partition():
    assert len(DIMENSIONS) == 11
    assert len(PERCEPTUAL) == 6 and len(ACTION) == 5
    assert set(PERCEPTUAL) | set(ACTION) == set(DIMENSIONS)
    assert [d.key for d in CLASSICAL_SENSES] == ["visual", "auditory", "gustatory", "olfactory", "haptic"]
    assert Dimension.INTEROCEPTIVE.is_perceptual


@pytest.mark.parametrize("token, want", [
    ("Visual", Dimension.VISUAL), ("leg_foot", Dimension.LEG_FOOT), ("Leg/Foot", Dimension.LEG_FOOT),
    ("HAND-ARM", Dimension.HAND_ARM), ("Embodiment", EMBODIMENT),
])
def test_parse_dimension(token, want):
    assert parse_dimension(token) is want


def test_parse_dimension_rejects_unknown():
    with pytest.raises(NormDataError):
        parse_dimension("Vision2")


def test_load_norms_example_row(tmp_path):
    p = tmp_path / "n.csv"
    p.write_text(HEADER + "早餐," + ",".join(f"{v:.3f}" for v in BREAKFAST) + "\n", encoding="utf-8")
    lex = load_norms(p)
    assert len(lex) == 1
    assert lex["早餐"].rating(Dimension.GUSTATORY) == 4.5


def test_load_norms_header_only(tmp_path):
    p = tmp_path / "n.csv"
    p.write_text(HEADER, encoding="utf-8")
    lex = load_norms(p)
    assert len(lex) == 0 and lex.rejected == ()


def test_load_norms_rejects_out_of_range(tmp_path):
    words = synthetic_words(20)
    R = synthetic_ratings(20)
    R[3, 0] = 7.2
    p = tmp_path / "n.csv"
    write_norms_csv(p, words, R)
    lex = load_norms(p)
    assert len(lex) == 19
    (rej,) = lex.rejected
    assert rej.word == words[3] and rej.line == 5
    assert rej.reason.startswith("rating out of [0,5]")


def test_load_norms_too_many_rejections(tmp_path):
    R = synthetic_ratings(10)
    R[:2, 0] = 9.0
    p = tmp_path / "n.csv"
    write_norms_csv(p, synthetic_words(10), R)
    with pytest.raises(NormDataError, match=">10%"):
        load_norms(p)


def test_load_norms_missing_column(tmp_path):
    p = tmp_path / "n.csv"
    p.write_text("word,visual\nx,1\n", encoding="utf-8")
    with pytest.raises(NormDataError, match="missing column"):
        load_norms(p)


def test_load_norms_schema_and_gzip(tmp_path):
    cols = {d.key: f"{d.label}.mean" for d in DIMENSIONS}
    header = "Word," + ",".join(cols.values()) + ",Emb\n"
    row = "早餐," + ",".join(str(v) for v in BREAKFAST) + ",3.1\n"
    p = tmp_path / "n.csv.gz"
    with gzip.open(p, "wt", encoding="utf-8") as fh:
        fh.write(header + row)
    lex = load_norms(p, {"word": "Word", "embodiment": "Emb", **cols})
    assert lex["早餐"].embodiment == 3.1
    assert lex.has_embodiment


def test_norms_roundtrip(tmp_path):
    words = synthetic_words(30)
    R = synthetic_ratings(30, seed=4)
    p = tmp_path / "n.csv"
    write_norms_csv(p, words, R, embodiment=R.mean(axis=1), pos=["noun"] * 30)
    lex = load_norms(p)
    q = tmp_path / "m.csv"
    write_norms(lex, q)
    again = load_norms(q)
    np.testing.assert_array_equal(again.ratings, lex.ratings)
    np.testing.assert_array_equal(again.embodiment, lex.embodiment)
    assert again.words == lex.words


def test_lexicon_rejects_duplicates():
    e = NormEntry("a", BREAKFAST)
    with pytest.raises(NormDataError):
        NormLexicon((e, e))


def test_intersect_identity_and_subset():
    entries = tuple(NormEntry(w, tuple(r)) for w, r in zip(synthetic_words(5), synthetic_ratings(5)))
    lex = NormLexicon(entries)
    assert intersect(lex, lex).words == lex.words
    sub = intersect(lex, ["w00003", "w00001", "zzz"])
    assert sub.words == ("w00001", "w00003")
    with pytest.raises(NormDataError):
        intersect(lex, ["nothing"])


def test_normalize_pos():
    assert normalize_pos("N") == "noun"
    assert normalize_pos("Verb") == "verb"
    assert normalize_pos("classifier") == "other"
    assert normalize_pos("") is None


def test_raw_responses_count_and_bad_dimension(tmp_path):
    rng = np.random.default_rng(0)
    recs = [("s1", f"p{k}", f"w{i}", d.label, float(rng.integers(0, 6)))
            for k in range(2) for i in range(15) for d in DIMENSIONS]
    p = tmp_path / "raw.csv"
    write_raw_csv(p, recs)
    table = load_raw_responses(p)
    assert len(table) == 330
    write_raw_csv(p, [("s1", "p1", "w", "Visual", 5.0)])
    assert load_raw_responses(p).records[0].rating == 5.0
    write_raw_csv(p, [("s1", "p1", "w", "Vision2", 5.0)])
    with pytest.raises(NormDataError):
        load_raw_responses(p)


def test_embeddings_header(tmp_path):
    p = tmp_path / "e.txt"
    p.write_text("2 3\n猫 0.1 0.2 0.3\n狗 0.0 1.0 0.0\n", encoding="utf-8")
    store = load_embeddings(p)
    assert store.dim == 3 and len(store) == 2
    np.testing.assert_array_equal(store.matrix(["狗"]), [[0.0, 1.0, 0.0]])


def test_embeddings_inferred_dim_and_skips(tmp_path):
    rng = np.random.default_rng(0)
    lines = [f"w{i} " + " ".join(str(x) for x in rng.normal(size=200)) for i in range(4)]
    lines.insert(2, "bad " + " ".join("0.5" for _ in range(199)))
    lines.append("w0 " + " ".join("9" for _ in range(200)))
    p = tmp_path / "e.txt"
    p.write_text("\n".join(lines) + "\n", encoding="utf-8")
    store = load_embeddings(p)
    assert store.dim == 200
    assert len(store) == 4
    assert store.skipped_lines == (3,)
    assert store.duplicates == 1
    assert store.vectors["w0"][0] != 9.0


def test_embeddings_empty_is_fatal(tmp_path):
    p = tmp_path / "e.txt"
    p.write_text("3 2\n", encoding="utf-8")
    with pytest.raises(NormDataError):
        load_embeddings(p)


def test_lexical_decision_loader(tmp_path):
    p = tmp_path / "ld.csv"
    p.write_text("word,zrt,err,length,log_freq\na,-0.2,0.1,1,2.0\nb,,0.3,2,1.0\nc,0.1,1.5,2,1.0\n",
                 encoding="utf-8")
    ld = load_lexical_decision(p)
    assert ld.words == ("a", "b")
    assert np.isnan(ld.records[1].zrt)
    assert len(ld.rejected) == 1


def test_external_norms_loader(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("word,Visual,notes\na,1.5,hello\nb,2.5,x\n", encoding="utf-8")
    ext = load_external_norms(p)
    assert ext.name == "x"
    assert set(ext.columns) == {"Visual"}


@settings(max_examples=50)
@given(st.lists(st.floats(0, 5, allow_nan=False), min_size=11, max_size=11))
def test_entry_accepts_any_in_range_vector(vals):
    assert NormEntry("x", tuple(vals)).ratings == tuple(vals)
