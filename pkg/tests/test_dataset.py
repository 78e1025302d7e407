"""Dataset schema, JSON-lines IO, validation, stats, split, diffing."""

import json

import pytest

from salientlights.dataset import (Annotation, BBox, Dataset, DatasetError,
                                   Frame, ParseError, generate_random_dataset,
                                   parse_dataset, salience_diff,
                                   serialize_dataset, split, stats, validate)

VALID_LINE = json.dumps({
    "frame_id": "f1", "image_width": 1280, "image_height": 960,
    "annotations": [{
        "x_min": 10, "y_min": 20, "x_max": 30, "y_max": 60,
        "status": "on", "color": "red", "directional": False,
        "occlusion": "none", "salient": True,
    }],
})


def make_frame(frame_id="f0", n_annotations=1, salient=False):
    anns = [Annotation(box=BBox(10.0 + i, 10.0, 20.0 + i, 20.0), status="on",
                       color="green", directional=False, occlusion="none",
                       salient=salient)
            for i in range(n_annotations)]
    return Frame(frame_id=frame_id, image_width=640, image_height=480,
                 annotations=anns)


class TestParse:
    def test_single_record(self):
        data = parse_dataset(VALID_LINE)
        assert len(data.frames) == 1
        frame = data.frames[0]
        assert frame.frame_id == "f1"
        assert (frame.image_width, frame.image_height) == (1280, 960)
        assert len(frame.annotations) == 1
        ann = frame.annotations[0]
        assert ann.box == BBox(10.0, 20.0, 30.0, 60.0)
        assert ann.status == "on" and ann.color == "red"
        assert ann.salient is True and ann.directional is False

    def test_unknown_color_reports_line(self):
        bad = VALID_LINE.replace('"red"', '"blue"')
        with pytest.raises(ParseError, match="line 1.*color"):
            parse_dataset(bad)

    def test_box_invariant_rejected(self):
        bad = VALID_LINE.replace('"x_min": 10', '"x_min": 45')
        with pytest.raises(ParseError, match="box"):
            parse_dataset(bad)

    def test_duplicate_frame_id(self):
        with pytest.raises(ParseError, match="line 2.*duplicate"):
            parse_dataset(VALID_LINE + "\n" + VALID_LINE)

    def test_unknown_field_rejected(self):
        obj = json.loads(VALID_LINE)
        obj["camera"] = "front"
        with pytest.raises(ParseError, match="unknown fields"):
            parse_dataset(json.dumps(obj))

    def test_missing_annotation_field(self):
        obj = json.loads(VALID_LINE)
        del obj["annotations"][0]["salient"]
        with pytest.raises(ParseError, match="missing fields"):
            parse_dataset(json.dumps(obj))

    def test_invalid_json_reports_line(self):
        with pytest.raises(ParseError, match="line 2"):
            parse_dataset(VALID_LINE + "\n{not json")

    def test_status_color_rule(self):
        bad = VALID_LINE.replace('"on"', '"off"')
        with pytest.raises(ParseError, match="status-color"):
            parse_dataset(bad)

    def test_out_of_image_box_rejected(self):
        bad = VALID_LINE.replace('"x_max": 30', '"x_max": 5000')
        with pytest.raises(ParseError, match="box-bounds"):
            parse_dataset(bad)

    def test_empty_and_blank_lines(self):
        assert parse_dataset("").frames == []
        assert len(parse_dataset("\n" + VALID_LINE + "\n\n").frames) == 1


class TestRoundTrip:
    def test_empty(self):
        assert serialize_dataset(Dataset()) == ""

    def test_single_frame(self):
        data = parse_dataset(VALID_LINE)
        assert parse_dataset(serialize_dataset(data)) == data

    def test_random_datasets(self):
        for seed in range(20):
            data = generate_random_dataset(10, seed=seed)
            assert parse_dataset(serialize_dataset(data)) == data

    def test_generator_output_is_valid(self):
        for seed in range(20):
            assert validate(generate_random_dataset(10, seed=seed)) == []


class TestValidate:
    def test_valid_dataset(self):
        assert validate(Dataset([make_frame()])) == []

    def test_box_outside_image(self):
        frame = make_frame()
        frame.annotations = [Annotation(
            box=BBox(600.0, 10.0, 700.0, 20.0), status="on", color="red",
            directional=False, occlusion="none", salient=False)]
        violations = validate(Dataset([frame]))
        assert len(violations) == 1
        assert violations[0].rule == "box-bounds"
        assert violations[0].annotation_index == 0

    def test_status_color_violation(self):
        frame = make_frame()
        frame.annotations = [Annotation(
            box=BBox(10.0, 10.0, 20.0, 20.0), status="off", color="red",
            directional=False, occlusion="none", salient=False)]
        violations = validate(Dataset([frame]))
        assert [v.rule for v in violations] == ["status-color"]

    def test_duplicate_frame_ids(self):
        violations = validate(Dataset([make_frame("a"), make_frame("a")]))
        assert [v.rule for v in violations] == ["duplicate-frame-id"]

    def test_invalid_box_geometry(self):
        frame = make_frame()
        frame.annotations = [Annotation(
            box=BBox(30.0, 10.0, 20.0, 20.0), status="on", color="red",
            directional=False, occlusion="none", salient=False)]
        assert [v.rule for v in validate(Dataset([frame]))] == ["box-geometry"]


class TestStats:
    def test_empty(self):
        st = stats(Dataset())
        assert st.total_annotations == 0
        assert st.salient_count == 0 and st.non_salient_count == 0
        assert st.per_category == {}

    def test_hand_counted_fixture(self):
        frames = [make_frame("a", 5, salient=True),
                  make_frame("b", 7, salient=False)]
        st = stats(Dataset(frames))
        assert st.total_annotations == 12
        assert st.salient_count == 5
        assert st.non_salient_count == 7

    def test_per_category_counts(self):
        st = stats(Dataset([make_frame("a", 3, salient=True)]))
        assert st.per_category == {(True, "green", "on", False): 3}

    def test_additivity(self):
        d1 = generate_random_dataset(8, seed=1)
        d2 = generate_random_dataset(8, seed=2)
        both = Dataset(d1.frames + d2.frames)
        s1, s2, s12 = stats(d1), stats(d2), stats(both)
        assert s12.total_annotations == s1.total_annotations + s2.total_annotations
        for key in set(s1.per_category) | set(s2.per_category):
            assert s12.per_category[key] == (s1.per_category.get(key, 0)
                                             + s2.per_category.get(key, 0))


class TestSplit:
    def test_sizes_10_frames(self):
        data = Dataset([make_frame(f"f{i}") for i in range(10)])
        train, val, test = split(data, (0.8, 0.1, 0.1), seed=42)
        assert (len(train.frames), len(val.frames), len(test.frames)) == (8, 1, 1)

    def test_all_train(self):
        data = Dataset([make_frame(f"f{i}") for i in range(7)])
        train, val, test = split(data, (1.0, 0.0, 0.0), seed=0)
        assert len(train.frames) == 7
        assert val.frames == [] and test.frames == []

    def test_deterministic(self):
        data = Dataset([make_frame(f"f{i}") for i in range(20)])
        ids = lambda parts: [[f.frame_id for f in p.frames] for p in parts]
        assert ids(split(data, (0.8, 0.1, 0.1), 7)) == \
            ids(split(data, (0.8, 0.1, 0.1), 7))

    def test_partition(self):
        data = Dataset([make_frame(f"f{i}") for i in range(23)])
        for seed in range(5):
            parts = split(data, (0.6, 0.2, 0.2), seed)
            all_ids = [f.frame_id for p in parts for f in p.frames]
            assert sorted(all_ids) == sorted(f.frame_id for f in data.frames)
            assert len(set(all_ids)) == len(all_ids)

    def test_remainder_goes_to_train(self):
        data = Dataset([make_frame(f"f{i}") for i in range(11)])
        train, val, test = split(data, (0.8, 0.1, 0.1), seed=0)
        # floor sizes are 1 and 1; the 9th frame stays in train
        assert (len(train.frames), len(val.frames), len(test.frames)) == (9, 1, 1)

    def test_order_preserved_within_parts(self):
        data = Dataset([make_frame(f"f{i:02d}") for i in range(12)])
        for part in split(data, (0.5, 0.25, 0.25), seed=3):
            ids = [f.frame_id for f in part.frames]
            assert ids == sorted(ids)

    def test_bad_ratios(self):
        data = Dataset([make_frame()])
        with pytest.raises(DatasetError):
            split(data, (0.5, 0.5, 0.5), seed=0)
        with pytest.raises(DatasetError):
            split(data, (1.2, -0.1, -0.1), seed=0)


class TestSalienceDiff:
    def test_identical(self):
        data = generate_random_dataset(5, seed=0)
        assert salience_diff(data, data) == []

    def test_single_flip(self):
        a = Dataset([make_frame("f0", 3, salient=False)])
        b = Dataset([make_frame("f0", 3, salient=False)])
        ann = b.frames[0].annotations[1]
        b.frames[0].annotations[1] = Annotation(
            box=ann.box, status=ann.status, color=ann.color,
            directional=ann.directional, occlusion=ann.occlusion, salient=True)
        diffs = salience_diff(a, b)
        assert len(diffs) == 1
        d = diffs[0]
        assert (d.frame_id, d.annotation_index) == ("f0", 1)
        assert (d.salient_a, d.salient_b) == (False, True)

    def test_frame_set_mismatch(self):
        a = Dataset([make_frame("f0"), make_frame("f1")])
        b = Dataset([make_frame("f0")])
        with pytest.raises(DatasetError, match="frame sets differ"):
            salience_diff(a, b)

    def test_annotation_count_mismatch(self):
        a = Dataset([make_frame("f0", 2)])
        b = Dataset([make_frame("f0", 3)])
        with pytest.raises(DatasetError, match="counts differ"):
            salience_diff(a, b)
