import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import numpy as np

from lexcat.corpus import Corpus, Judgement, LabelAssignment
from lexcat.labels import (
    LabelError,
    bts_decode,
    bts_encode,
    build_class_catalog,
    canonicalize,
    mts_decode,
    mts_encode,
)

# the two annotations of the worked example document
CM_REAL = LabelAssignment(
    "civil/mercantile", ("real rights", "guarantee real rights", "mortgage law")
)
M_OBLIG = LabelAssignment(
    "mercantile",
    ("obligations - contracts law", "banking - financial market law", "banking law"),
)
CM_OBLIG = LabelAssignment(
    "civil/mercantile", ("obligations - contracts law", "damages law", "road traffic law")
)


def _corpus(label_sets):
    docs = tuple(
        Judgement(f"d{i}", "t", tuple(s)) for i, s in enumerate(label_sets)
    )
    return Corpus(docs)


def test_build_class_catalog_single():
    catalog = build_class_catalog(_corpus([[CM_REAL]] * 3))
    assert catalog.m == 1


def test_build_class_catalog_example_doc():
    catalog = build_class_catalog(_corpus([[CM_REAL, M_OBLIG]]))
    assert catalog.m == 2
    # civil/mercantile sorts before mercantile
    assert catalog.classes[0] == CM_REAL
    assert catalog.classes[1] == M_OBLIG


def test_bts_encode_reference_row():
    catalog = build_class_catalog([[CM_REAL], [M_OBLIG], [CM_OBLIG]])
    beta = bts_encode([[CM_REAL, M_OBLIG]], catalog)
    expected = np.zeros(3, dtype=np.uint8)
    expected[catalog.index(CM_REAL)] = 1
    expected[catalog.index(M_OBLIG)] = 1
    assert (beta[0] == expected).all()
    assert beta[0][catalog.index(CM_OBLIG)] == 0


def test_bts_encode_basics():
    catalog = build_class_catalog([[CM_REAL], [M_OBLIG]])
    one_hot = bts_encode([[CM_REAL]], catalog)
    assert one_hot.tolist() == [[1, 0]]
    same = bts_encode([[CM_REAL, M_OBLIG], [M_OBLIG, CM_REAL]], catalog)
    assert (same[0] == same[1]).all()
    with pytest.raises(LabelError, match="not in catalog"):
        bts_encode([[CM_OBLIG]], catalog)


def test_bts_decode():
    catalog = build_class_catalog([[CM_REAL], [M_OBLIG], [CM_OBLIG]])
    assert bts_decode(np.array([1, 0, 0]), catalog) == (catalog.classes[0],)
    beta = bts_encode([[CM_REAL, M_OBLIG]], catalog)
    assert set(bts_decode(beta[0], catalog)) == {CM_REAL, M_OBLIG}
    # abstention fallback: argmax of the scores
    assert bts_decode(np.array([0.2, 0.4, 0.1]), catalog) == (catalog.classes[1],)
    with pytest.raises(LabelError):
        bts_decode(np.array([1, 0]), catalog)


def test_bts_decode_over_prediction_keeps_top3():
    extra = LabelAssignment("penal", ("a", "b", "c"))
    catalog = build_class_catalog([[CM_REAL], [M_OBLIG], [CM_OBLIG], [extra]])
    scores = np.array([0.9, 0.8, 0.7, 0.6])
    decoded = bts_decode(scores, catalog)
    assert len(decoded) == 3
    assert catalog.classes[3] not in decoded


def test_canonicalize():
    a, b = M_OBLIG, CM_REAL
    assert canonicalize([a, b]) == (CM_REAL, M_OBLIG)
    assert canonicalize([b, a]) == canonicalize([a, b])
    with pytest.raises(LabelError):
        canonicalize([])


@settings(max_examples=100, deadline=None)
@given(st.permutations([CM_REAL, M_OBLIG, CM_OBLIG]))
def test_canonicalize_permutation_invariant(perm):
    assert canonicalize(perm) == canonicalize([CM_REAL, M_OBLIG, CM_OBLIG])


def test_mts_encode_reference():
    catalog, alphas = mts_encode([[CM_REAL, M_OBLIG]])
    assert catalog.p == 1
    assert alphas == [1]
    assert mts_decode(1, catalog) == (CM_REAL, M_OBLIG)


def test_mts_permuted_sets_same_alpha():
    _, alphas = mts_encode([[CM_REAL, M_OBLIG], [M_OBLIG, CM_REAL]])
    assert alphas[0] == alphas[1]


def test_mts_all_distinct():
    catalog, alphas = mts_encode([[CM_REAL], [M_OBLIG], [CM_OBLIG]])
    assert catalog.p == 3
    assert sorted(alphas) == [1, 2, 3]


def test_mts_round_trip_is_canonical():
    catalog, alphas = mts_encode([[M_OBLIG, CM_REAL]])
    assert mts_decode(alphas[0], catalog) == canonicalize([CM_REAL, M_OBLIG])


def test_mts_decode_range():
    catalog, _ = mts_encode([[CM_REAL]])
    assert mts_decode(catalog.p, catalog) == (CM_REAL,)
    with pytest.raises(LabelError):
        mts_decode(0, catalog)
    with pytest.raises(LabelError):
        mts_decode(catalog.p + 1, catalog)


def test_bts_round_trip_on_training_sets():
    sets = [[CM_REAL], [M_OBLIG, CM_OBLIG], [CM_REAL, M_OBLIG, CM_OBLIG]]
    catalog = build_class_catalog(sets)
    beta = bts_encode(sets, catalog)
    for i, s in enumerate(sets):
        assert set(bts_decode(beta[i], catalog)) == set(s)
    assert beta.sum(axis=1).tolist() == [1, 2, 3]
    # column sums equal per-class supports
    for j, cls in enumerate(catalog.classes):
        support = sum(1 for s in sets if cls in s)
        assert beta[:, j].sum() == support
