import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gazekit.dataset import (
    DataError,
    StimulusGeometry,
    dumps_annotations,
    dumps_dataset,
    load_dataset,
    parse_annotations,
    parse_dataset,
)
from gazekit.rng import Rng
from gazekit.synth import CategorySpec, SynthSpec, desk_scale_spec, part_box, synthesize_dataset
from gazekit.partseq import points_in_polygon

from conftest import session_line


def test_default_geometry():
    g = StimulusGeometry()
    assert (g.width_px, g.height_px, g.pixels_per_degree) == (1024, 1024, 36.0)
    for bad in [(0, 10, 1.0), (10, -1, 1.0), (10, 10, 0.0)]:
        with pytest.raises(ValueError):
            StimulusGeometry(*bad)


def test_nine_fixation_session(tmp_path):
    fx = [{"x": 10 * k, "y": 5, "t": 100 + k} for k in range(9)]
    p = tmp_path / "f.jsonl"
    p.write_text(session_line(fixations=fx) + "\n")
    ds = load_dataset(p)
    assert len(ds) == 1
    assert ds.max_sequence_length == 9


def test_empty_file(tmp_path):
    p = tmp_path / "empty.jsonl"
    p.write_text("")
    ds = load_dataset(p)
    assert len(ds) == 0 and ds.max_sequence_length == 0
    with pytest.raises(DataError):
        ds.require_nonempty()


def test_negative_duration_names_line():
    lines = [session_line(subject="a"), session_line(subject="b", fixations=[{"x": 1, "y": 1, "t": -5}])]
    with pytest.raises(DataError) as exc:
        parse_dataset(lines)
    assert exc.value.line == 2
    assert "line 2" in str(exc.value)


@pytest.mark.parametrize(
    "fixations, fragment",
    [
        ([], "non-empty"),
        ([{"x": 1024, "y": 3, "t": 10}], "outside"),
        ([{"x": -0.1, "y": 3, "t": 10}], "outside"),
        ([{"x": 1, "y": 3}], "x, y, t"),
        ([{"x": "a", "y": 3, "t": 1}], "number"),
        ([{"x": 1, "y": 3, "t": 0}], "non-positive"),
    ],
)
def test_session_validation(fixations, fragment):
    with pytest.raises(DataError, match=fragment):
        parse_dataset([session_line(fixations=fixations)])


def test_out_of_bounds_count_reported():
    fx = [{"x": 2000, "y": 1, "t": 1}, {"x": 1, "y": 1, "t": 1}, {"x": 1, "y": 1030, "t": 1}]
    with pytest.raises(DataError, match="2 fixation"):
        parse_dataset([session_line(fixations=fx)])


def test_malformed_and_duplicate_lines():
    with pytest.raises(DataError, match="line 1"):
        parse_dataset(["{not json"])
    with pytest.raises(DataError, match="duplicate"):
        parse_dataset([session_line(), session_line()])
    with pytest.raises(DataError, match="regime"):
        parse_dataset([session_line(regime="other")])


def test_dataset_properties_and_filter():
    lines = [
        session_line("s1", "b", "u1", "primed", [{"x": 1, "y": 1, "t": 1}] * 3),
        session_line("s2", "a", "u1", "unprimed", [{"x": 1, "y": 1, "t": 1}] * 7),
        session_line("s2", "a", "u2", "primed"),
    ]
    ds = parse_dataset(lines)
    assert ds.categories == ["a", "b"]
    assert ds.max_sequence_length == 7
    assert ds.subjects == ["u1", "u2"]
    assert len(ds.filter("primed")) == 2
    assert len(ds.filter("unprimed")) == 1
    assert len(ds.filter("both", categories=["b"])) == 1
    with pytest.raises(ValueError):
        ds.filter("sometimes")


def test_round_trip_is_byte_identical(tmp_path):
    lines = [
        session_line("s1", "c", "u1", "primed", [{"x": 1, "y": 2.5, "t": 100}, {"x": 0.1, "y": 3, "t": 1e-3}]),
        session_line("s1", "c", "u2", "unprimed", [{"x": 1023.999, "y": 0, "t": 7}]),
    ]
    text = dumps_dataset(parse_dataset(lines))
    p = tmp_path / "a.jsonl"
    p.write_text(text)
    assert dumps_dataset(load_dataset(p)) == text


coord = st.floats(0, 1023.9, allow_nan=False)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(coord, coord, st.floats(1e-3, 1e4)), min_size=1, max_size=12))
def test_round_trip_property(fx):
    line = session_line(fixations=[{"x": x, "y": y, "t": t} for x, y, t in fx])
    once = dumps_dataset(parse_dataset([line]))
    assert dumps_dataset(parse_dataset(once.splitlines())) == once
    back = parse_dataset(once.splitlines()).sessions[0]
    assert [(f.x, f.y, f.duration_ms) for f in back.fixations] == [tuple(map(float, f)) for f in fx]


# --- annotations --------------------------------------------------------------

def tri(x, y, s=10):
    return [[x, y], [x + s, y], [x, y + s]]


def test_airplane_annotation():
    doc = {"sketches": [{"sketch_id": "plane", "parts": [
        {"label": "fuselage", "polygon": tri(0, 0)},
        {"label": "wing", "polygon": tri(20, 0)},
        {"label": "window", "polygon": tri(40, 0)},
    ]}]}
    ann = parse_annotations(doc)
    assert list(ann) == ["plane"]
    assert len(ann["plane"].parts) == 3
    assert ann["plane"].labels == ["fuselage", "window", "wing"]


def test_degenerate_polygon():
    doc = {"sketches": [{"sketch_id": "s", "parts": [{"label": "w", "polygon": [[0, 0], [1, 1]]}]}]}
    with pytest.raises(DataError, match="degenerate"):
        parse_annotations(doc)


def test_multi_piece_part_accepted():
    doc = {"sketches": [{"sketch_id": "s", "parts": [
        {"label": "wing", "polygon": tri(0, 0)},
        {"label": "wing", "polygon": tri(50, 0)},
    ]}]}
    ann = parse_annotations(doc)["s"]
    assert ann.labels == ["wing"] and len(ann.parts) == 2


def test_annotation_round_trip():
    doc = {"sketches": [{"sketch_id": "s", "parts": [{"label": "w", "polygon": tri(1.5, 2)}]}]}
    text = dumps_annotations(parse_annotations(doc))
    assert dumps_annotations(parse_annotations(json.loads(text))) == text
    with pytest.raises(DataError, match="twice"):
        parse_annotations({"sketches": doc["sketches"] * 2})


# --- synthesis ----------------------------------------------------------------

def two_part_category(name, pi=(0.5, 0.5), A=((0.5, 0.5), (0.5, 0.5))):
    return CategorySpec(
        name=name,
        part_labels=("A", "B"),
        means=((40.0, 40.0), (150.0, 150.0)),
        covariances=(((25.0, 0.0), (0.0, 25.0)),) * 2,
        initial=pi,
        transitions=A,
    )


def test_synth_counts():
    spec = SynthSpec(
        categories=(two_part_category("x"), two_part_category("y")),
        geometry=StimulusGeometry(200, 200, 10.0),
        sketches_per_category=4,
        subjects_per_sketch=3,
        length_range=(5, 5),
    )
    res = synthesize_dataset(spec, Rng(1))
    assert len(res.dataset) == 24
    assert sum(len(s) for s in res.dataset.sessions) == 120
    assert len(res.annotations) == 8


def test_absorbing_chain():
    cat = two_part_category("x", pi=(1.0, 0.0), A=((1.0, 0.0), (0.5, 0.5)))
    spec = SynthSpec(categories=(cat,), geometry=StimulusGeometry(200, 200, 10.0), sketches_per_category=3)
    res = synthesize_dataset(spec, Rng(5))
    assert all(set(v) == {"A"} for v in res.labels.values())


def test_desk_scale_defaults():
    spec = desk_scale_spec(StimulusGeometry(256, 256, 9.0), Rng(0))
    assert len(spec.categories) == 13
    assert spec.sketches_per_category == 24 and spec.subjects_per_sketch == 4
    res = synthesize_dataset(spec, Rng(0))
    assert len(res.dataset) == 13 * 24 * 4


def test_synth_inside_and_labels_match_boxes():
    geo = StimulusGeometry(256, 256, 9.0)
    spec = desk_scale_spec(geo, Rng(3), n_categories=4, sketches_per_category=3, subjects_per_sketch=2)
    res = synthesize_dataset(spec, Rng(4))
    cats = {c.name: c for c in spec.categories}
    for s in res.dataset.sessions:
        xy = s.xy
        assert np.all((xy >= 0) & (xy < [geo.width_px, geo.height_px]))
        labels = res.labels[(s.sketch_id, s.subject_id)]
        assert len(labels) == len(s)
        ann = res.annotations[s.sketch_id]
        c = cats[s.category]
        polys = dict(ann.parts)
        for lab in set(labels):
            mean = c.means[c.part_labels.index(lab)]
            assert points_in_polygon([mean], polys[lab])[0]


def test_synth_byte_identical():
    geo = StimulusGeometry(128, 128, 6.0)
    spec = desk_scale_spec(geo, Rng(9), n_categories=3, sketches_per_category=2, subjects_per_sketch=2)
    a = dumps_dataset(synthesize_dataset(spec, Rng(11)).dataset)
    b = dumps_dataset(synthesize_dataset(spec, Rng(11)).dataset)
    c = dumps_dataset(synthesize_dataset(spec, Rng(12)).dataset)
    assert a == b and a != c


def test_part_box_is_two_sigma():
    box = part_box((10.0, 20.0), ((4.0, 0.0), (0.0, 9.0)))
    xs = [p[0] for p in box]
    ys = [p[1] for p in box]
    assert (min(xs), max(xs), min(ys), max(ys)) == (6.0, 14.0, 14.0, 26.0)


def test_rng_streams():
    a = Rng(7).derive("pair", "x", 3).uniform(size=5)
    b = Rng(7).derive("pair", "x", 3).uniform(size=5)
    c = Rng(7).derive("pair", "x", 4).uniform(size=5)
    assert np.array_equal(a, b) and not np.array_equal(a, c)
    with pytest.raises(ValueError):
        Rng(-1)
