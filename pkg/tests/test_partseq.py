import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gazekit.dataset import Dataset, PartAnnotation, StimulusGeometry
from gazekit.partseq import (
    UNASSIGNED,
    assign_labels,
    assign_parts,
    boundary_distance,
    nw_score,
    nw_similarity,
    points_in_polygon,
    polygon_area,
    random_similarities,
    similarity_report,
    similarity_zscore,
)
from gazekit.rng import Rng

from conftest import make_session


def all_alignment_scores(a, b):
    """Yield the score of every global alignment (match, mismatch, gap in a, gap in b)."""
    if not a and not b:
        yield 0
        return
    if a and b:
        for s in all_alignment_scores(a[1:], b[1:]):
            yield s + (1 if a[0] == b[0] else 0)
    if a:
        yield from all_alignment_scores(a[1:], b)
    if b:
        yield from all_alignment_scores(a, b[1:])


def brute_similarity(a, b):
    return max(all_alignment_scores(tuple(a), tuple(b))) / max(len(a), len(b))


def test_alignment_examples():
    assert nw_similarity("ABCB", "BC") == 0.5
    assert brute_similarity("ABCB", "BC") == 0.5
    assert nw_similarity(["w", "x", "y"], ["w", "x", "y"]) == 1.0
    assert nw_similarity("abc", "xyz") == 0.0
    with pytest.raises(ValueError):
        nw_similarity([], ["a"])


seqs = st.lists(st.sampled_from("abc"), min_size=1, max_size=6)


@settings(max_examples=500, deadline=None)
@given(seqs, seqs)
def test_nw_matches_exhaustive(a, b):
    assert nw_similarity(a, b) == brute_similarity(a, b)


@settings(max_examples=200, deadline=None)
@given(seqs, seqs)
def test_nw_properties(a, b):
    s = nw_similarity(a, b)
    assert s == nw_similarity(b, a)
    assert 0.0 <= s <= 1.0
    assert (s == 1.0) == (a == b)


@settings(max_examples=50, deadline=None)
@given(seqs, st.integers(1, 6))
def test_suffix_extension_decreases(a, extra):
    vals = [nw_similarity(a, a + ["z"] * k) for k in range(extra + 1)]
    assert all(x > y for x, y in zip(vals, vals[1:]))


@settings(max_examples=50, deadline=None)
@given(seqs, st.lists(st.lists(st.integers(0, 2), min_size=4, max_size=4), min_size=1, max_size=6))
def test_batch_scores_match_scalar(a, batch):
    vocab = ["a", "b", "c"]

    class Fixed:
        def integers(self, lo, hi, size):
            return np.array(batch)

    out = random_similarities(a, 4, vocab, Fixed(), len(batch))
    for row, v in zip(batch, out):
        assert v == nw_score(a, [vocab[i] for i in row]) / max(len(a), 4)


def test_zscore_identical_large_vocab():
    a = [f"p{k % 7}" for k in range(10)]
    vocab = [f"p{k}" for k in range(12)]
    assert similarity_zscore(a, a, vocab, Rng(3)) > 2


def test_zscore_errors():
    with pytest.raises(ValueError):
        similarity_zscore("aa", "aa", ["a"], Rng(0))
    with pytest.raises(ValueError):
        similarity_zscore("ab", "ab", ["a", "b"], Rng(0), n_random=1)


def test_zscore_sample_std():
    class Fixed:
        def __init__(self, rows):
            self.rows = np.array(rows)

        def integers(self, lo, hi, size):
            return self.rows

    rows = [[0, 0], [1, 1], [0, 1]]  # vs a=(a,b): sims 0.5, 0.5, 1.0
    z = similarity_zscore("ab", "ab", ["a", "b"], Fixed(rows), n_random=3)
    r = np.array([0.5, 0.5, 1.0])
    assert z == pytest.approx((1.0 - r.mean()) / r.std(ddof=1), abs=1e-12)


def test_zscore_null_distribution():
    vocab = list("abcd")
    inside = 0
    for seed in range(200):
        r = np.random.default_rng(seed)
        a = list(r.choice(vocab, 9))
        b = list(r.choice(vocab, 9))
        inside += abs(similarity_zscore(a, b, vocab, Rng(seed))) <= 2.5
    assert inside / 200 >= 0.95


# --- assignment --------------------------------------------------------------------

def box(x0, y0, x1, y1):
    return ((x0, y0), (x1, y0), (x1, y1), (x0, y1))


def dense_boundary_distance(p, poly, n=4000):
    pts = []
    for a, b in zip(poly, poly[1:] + poly[:1]):
        t = np.linspace(0, 1, n)[:, None]
        pts.append(np.asarray(a) + t * (np.asarray(b) - np.asarray(a)))
    return np.min(np.linalg.norm(np.vstack(pts) - np.asarray(p), axis=1))


def test_centroid_of_triangle():
    tri = ((0.0, 0.0), (30.0, 0.0), (0.0, 30.0))
    ann = PartAnnotation("s", (("wing", tri),))
    assert assign_labels([(10, 10)], ann, 36.0) == ["wing"]


def test_smallest_area_wins():
    ann = PartAnnotation("s", (("fuselage", box(0, 0, 100, 100)), ("window", box(40, 40, 50, 50))))
    assert polygon_area(box(40, 40, 50, 50)) == 100.0
    assert assign_labels([(45, 45), (10, 10)], ann, 36.0) == ["window", "fuselage"]


def test_equal_area_lexicographic():
    ann = PartAnnotation("s", (("zeta", box(0, 0, 10, 10)), ("alpha", box(0, 0, 10, 10))))
    assert assign_labels([(5, 5)], ann, 36.0) == ["alpha"]


def test_far_fixation_unassigned():
    poly = box(100, 100, 200, 200)
    ann = PartAnnotation("s", (("body", poly),))
    p = (250.0, 150.0)
    # sampling step is 100 / 4000 px
    assert dense_boundary_distance(p, list(poly)) == pytest.approx(50.0, abs=0.03)
    assert boundary_distance([p], poly)[0] == 50.0
    assert assign_labels([p], ann, 36.0) == [UNASSIGNED]
    assert assign_labels([(230, 150)], ann, 36.0) == ["body"]


def test_boundary_counts_as_inside():
    poly = box(0, 0, 10, 10)
    assert points_in_polygon([(10, 5), (0, 0), (5, 10)], poly).all()
    assert not points_in_polygon([(10.5, 5)], poly)[0]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_boundary_distance_and_unassigned_oracle(seed):
    r = np.random.default_rng(seed)
    polys = []
    for k in range(3):
        c = r.uniform(50, 150, 2)
        ang = np.sort(r.uniform(0, 2 * np.pi, 5))
        rad = r.uniform(5, 25, 5)
        polys.append(tuple(map(tuple, c + np.column_stack([rad * np.cos(ang), rad * np.sin(ang)]))))
    ann = PartAnnotation("s", tuple((f"p{k}", p) for k, p in enumerate(polys)))
    pts = r.uniform(0, 200, (20, 2))
    labels = assign_labels(pts, ann, 10.0)
    for p, lab in zip(pts, labels):
        ds = [dense_boundary_distance(p, list(poly)) for poly in polys]
        bd = [boundary_distance([p], poly)[0] for poly in polys]
        assert np.allclose(ds, bd, atol=0.05)
        if lab == UNASSIGNED:
            assert min(ds) > 10.0 - 0.05
            assert not any(points_in_polygon([p], poly)[0] for poly in polys)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_assignment_order_free(seed):
    r = np.random.default_rng(seed)
    parts = []
    for k in range(4):
        x0, y0 = r.uniform(0, 80, 2)
        w, h = r.uniform(5, 40, 2)
        parts.append((f"q{k}", box(x0, y0, x0 + w, y0 + h)))
    pts = r.uniform(0, 120, (25, 2))
    a = assign_labels(pts, PartAnnotation("s", tuple(parts)), 8.0)
    perm = [parts[i] for i in r.permutation(4)]
    assert assign_labels(pts, PartAnnotation("s", tuple(perm)), 8.0) == a


def test_assign_parts_session():
    geo = StimulusGeometry(100, 100, 10.0)
    s = make_session("k", "c", "u", [(5, 5), (50, 50), (99, 99)])
    ann = PartAnnotation("k", (("a", box(0, 0, 20, 20)), ("b", box(40, 40, 60, 60))))
    seq = assign_parts(s, ann, geo)
    assert seq.labels == ("a", "b", UNASSIGNED)
    dropped = seq.dropping_unassigned()
    assert dropped.labels == ("a", "b") and dropped.source_indices == (0, 1)
    with pytest.raises(KeyError):
        assign_parts(s, None, geo)


# --- report ----------------------------------------------------------------------

def _part_dataset(paths, cat="c"):
    geo = StimulusGeometry(100, 100, 5.0)
    centers = {"a": (10, 10), "b": (50, 50), "c": (90, 90)}
    sessions, ann = [], {}
    for k, path in enumerate(paths):
        sk = f"{cat}{k // 2}"
        ann[sk] = PartAnnotation(sk, tuple((l, box(c[0] - 5, c[1] - 5, c[0] + 5, c[1] + 5)) for l, c in centers.items()))
        sessions.append(make_session(sk, cat, f"u{k % 2}", [centers[l] for l in path]))
    return Dataset(geo, tuple(sessions)), ann


def test_report_identical_paths():
    ds, ann = _part_dataset(["abcab"] * 6)
    rep = similarity_report(ds, ann, Rng(0), n_random=20)
    assert rep.per_category_median_similarity == {"c": 1.0}
    assert rep.n_pairs == {"c": 15}
    assert rep.per_category_median_zscore["c"] > 0


def test_report_null_median_z():
    meds = []
    for seed in range(12):
        r = np.random.default_rng(seed)
        paths = ["".join(r.choice(list("abc"), 8)) for _ in range(8)]
        ds, ann = _part_dataset(paths)
        meds.append(similarity_report(ds, ann, Rng(seed), n_random=50).per_category_median_zscore["c"])
    assert abs(np.mean(meds)) < 1.0


def test_report_threads_and_skips():
    ds, ann = _part_dataset(["abc", "bca", "cab", "acb"])
    a = similarity_report(ds, ann, Rng(5), n_random=10)
    b = similarity_report(ds, ann, Rng(5), n_random=10, threads=4)
    assert a.to_dict() == b.to_dict()
    lone = Dataset(ds.geometry, ds.sessions[:1])
    assert similarity_report(lone, ann, Rng(5)).skipped_categories == ["c"]
