import itertools
import json

import numpy as np
import pytest

from scenecontext.dataset import (
    AnnotationError,
    DatasetIndex,
    Dictionary,
    enumerate_pairs,
    export_dictionaries,
    image_stats,
    import_dictionaries,
    load_annotations,
    load_detections,
    load_dictionary,
    save_annotations,
    split,
)
from scenecontext.geometry import Box

from conftest import synthetic_annotations


def single_record(predicate=0, s_cat=0, o_cat=1):
    return {
        "img.jpg": [
            {
                "predicate": predicate,
                "subject": {"category": s_cat, "bbox": [10, 20, 30, 40]},
                "object": {"category": o_cat, "bbox": [1, 2, 3, 4]},
            }
        ]
    }


class TestLoadAnnotations:
    def test_box_order_converted(self):
        index = load_annotations(single_record(), ["a", "b"], ["p"])
        subject = index.images["img.jpg"].relationships[0].subject
        # [y_min, y_max, x_min, x_max] = [10, 20, 30, 40]
        assert subject.bbox == Box(30.0, 10.0, 40.0, 20.0)

    def test_deduplication(self, cart_scene):
        payload, objects, predicates = cart_scene
        index = load_annotations(payload, objects, predicates)
        ann = index.images["cart_scene.jpg"]
        assert len(ann.relationships) == 7
        assert len(ann.instances) == 8
        ids = [inst.instance_id for inst in ann.instances]
        assert ids == list(range(8))

    def test_same_category_different_box_not_merged(self):
        payload = {
            "img.jpg": [
                {
                    "predicate": 0,
                    "subject": {"category": 0, "bbox": [0, 10, 0, 10]},
                    "object": {"category": 0, "bbox": [5, 15, 5, 15]},
                }
            ]
        }
        index = load_annotations(payload, ["a"], ["p"])
        assert len(index.images["img.jpg"].instances) == 2

    def test_empty_map(self):
        index = load_annotations({}, ["a"], ["p"])
        assert len(index) == 0
        assert len(index.objects) == 1 and len(index.predicates) == 1

    def test_predicate_at_bound_rejected(self):
        with pytest.raises(AnnotationError, match=r"img\.jpg.*record 0.*outside \[0, 1\)"):
            load_annotations(single_record(predicate=1), ["a", "b"], ["p"])

    def test_category_out_of_range(self):
        with pytest.raises(AnnotationError, match="category"):
            load_annotations(single_record(s_cat=7), ["a", "b"], ["p"])

    def test_malformed_record_names_image_and_ordinal(self):
        payload = {"img.jpg": [{"predicate": 0, "subject": {"category": 0}}]}
        with pytest.raises(AnnotationError, match=r"img\.jpg.*record 0"):
            load_annotations(payload, ["a"], ["p"])

    def test_malformed_bbox(self):
        bad = single_record()
        bad["img.jpg"][0]["subject"]["bbox"] = [1, 2, 3]
        with pytest.raises(AnnotationError, match="bbox"):
            load_annotations(bad, ["a", "b"], ["p"])

    def test_synthetic_dictionaries_from_none(self):
        index = load_annotations(single_record(), None, None)
        assert len(index.objects) == 2
        assert len(index.predicates) == 1

    def test_round_trip_save_load(self, tmp_path):
        rng = np.random.default_rng(3)
        payload = synthetic_annotations(12, rng)
        index = load_annotations(payload, Dictionary.synthetic("object", 6), Dictionary.synthetic("predicate", 4))
        out = tmp_path / "roundtrip.json"
        save_annotations(index, out)
        again = load_annotations(out, index.objects, index.predicates)
        assert again == index


class TestSplit:
    def make_index(self, n, seed=0):
        rng = np.random.default_rng(seed)
        return load_annotations(synthetic_annotations(n, rng), None, None)

    def test_proportional_rounding_100(self):
        train, val, test = split(self.make_index(100), seed=7)
        assert (len(train), len(val), len(test)) == (64, 16, 20)

    def test_deterministic(self):
        index = self.make_index(50)
        a = split(index, seed=11)
        b = split(index, seed=11)
        assert [part.image_ids() for part in a] == [part.image_ids() for part in b]

    def test_seed_changes_partition(self):
        index = self.make_index(50)
        a = split(index, seed=1)
        b = split(index, seed=2)
        assert a[0].image_ids() != b[0].image_ids()

    def test_disjoint_union(self):
        index = self.make_index(47)
        train, val, test = split(index, seed=5)
        ids = train.image_ids() + val.image_ids() + test.image_ids()
        assert len(ids) == len(set(ids))
        assert sorted(ids) == index.image_ids()

    def test_empty_images_excluded(self):
        from scenecontext.dataset import ImageAnnotation

        index = self.make_index(20)
        index.images["empty.jpg"] = ImageAnnotation()
        train, val, test = split(index, seed=0)
        all_ids = set(train.image_ids()) | set(val.image_ids()) | set(test.image_ids())
        assert "empty.jpg" not in all_ids
        assert len(all_ids) == 20

    def test_too_few_images(self):
        with pytest.raises(AnnotationError, match="split"):
            split(self.make_index(2), seed=0)

    def test_vrd_sized_input_hits_reference_sizes(self):
        # 4735 non-empty images is the size the 3030:750:955 weights
        # resolve on exactly, for any seed
        payload = synthetic_annotations(4735, np.random.default_rng(1), max_rels=1)
        index = load_annotations(payload, None, None)
        train, val, test = split(index, seed=123)
        assert (len(train), len(val), len(test)) == (3030, 750, 955)


class TestEnumeratePairs:
    def test_counts_n8(self):
        instances = list(range(8))
        assert len(enumerate_pairs(instances, "unordered")) == 28
        assert len(enumerate_pairs(instances, "ordered")) == 56

    def test_single_instance(self):
        assert enumerate_pairs([object()], "ordered") == []
        assert enumerate_pairs([], "unordered") == []

    @pytest.mark.parametrize("n", range(13))
    def test_against_itertools(self, n):
        instances = list(range(n))
        assert enumerate_pairs(instances, "ordered") == list(
            itertools.permutations(range(n), 2)
        )
        assert enumerate_pairs(instances, "unordered") == list(
            itertools.combinations(range(n), 2)
        )

    def test_ordered_properties(self):
        pairs = enumerate_pairs(list(range(9)), "ordered")
        assert len(pairs) == 9 * 8
        assert all(s != o for s, o in pairs)
        assert len(set(pairs)) == len(pairs)

    def test_unknown_mode(self):
        with pytest.raises(ValueError, match="mode"):
            enumerate_pairs([], "diagonal")


class TestImageStats:
    def test_empty(self):
        index = load_annotations({}, ["a"], ["p"])
        stats = image_stats(index)
        assert stats.rows == []
        assert stats.summary() == {"images": 0}

    def test_mean(self):
        payload = {}
        for i, k in enumerate((1, 2, 3)):
            payload[f"im{i}.jpg"] = [
                {
                    "predicate": 0,
                    "subject": {"category": 0, "bbox": [0, j + 1, 0, 1]},
                    "object": {"category": 0, "bbox": [0, j + 1, 2, 3]},
                }
                for j in range(k)
            ]
        stats = image_stats(load_annotations(payload, ["a"], ["p"]))
        assert stats.summary()["relationships"]["mean"] == 2.0
        assert stats.summary()["relationships"]["max_image"] == "im2.jpg"

    def test_csv_output(self, tmp_path, cart_scene):
        payload, objects, predicates = cart_scene
        stats = image_stats(load_annotations(payload, objects, predicates))
        out = tmp_path / "stats.csv"
        stats.write_csv(out)
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "image_id,objects,relationships"
        assert lines[1] == "cart_scene.jpg,8,7"

    def test_histogram(self):
        payload = synthetic_annotations(30, np.random.default_rng(0))
        stats = image_stats(load_annotations(payload, None, None))
        hist = stats.histogram("relationships")
        assert sum(hist.values()) == 30


class TestDictionaries:
    def test_round_trip(self, tmp_path, cart_scene):
        payload, objects, predicates = cart_scene
        index = load_annotations(payload, objects, predicates)
        export_dictionaries(index, tmp_path)
        objs, preds = import_dictionaries(tmp_path)
        assert objs == objects and preds == predicates

    def test_duplicate_names_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            Dictionary(["a", "b", "a"])

    def test_bare_list_accepted(self, tmp_path):
        path = tmp_path / "names.json"
        path.write_text(json.dumps(["x", "y"]))
        assert load_dictionary(path).names == ("x", "y")

    def test_bad_schema(self, tmp_path):
        path = tmp_path / "names.json"
        path.write_text(json.dumps({"labels": ["x"]}))
        with pytest.raises(AnnotationError, match=str(path)):
            load_dictionary(path)

    def test_lookup_errors(self):
        d = Dictionary(["a"])
        with pytest.raises(AnnotationError):
            d.name_of(1)
        with pytest.raises(AnnotationError):
            d.index_of("zz")


class TestMerge:
    def test_merge_counts(self):
        rng = np.random.default_rng(5)
        objects = Dictionary.synthetic("object", 6)
        predicates = Dictionary.synthetic("predicate", 4)
        a = load_annotations(synthetic_annotations(5, rng), objects, predicates)
        payload_b = {f"extra_{k}": v for k, v in synthetic_annotations(4, rng).items()}
        b = load_annotations(payload_b, objects, predicates)
        merged = a.merge(b)
        assert len(merged) == 9
        assert merged.relationship_count() == a.relationship_count() + b.relationship_count()

    def test_merge_rejects_overlap(self):
        index = load_annotations(single_record(), ["a", "b"], ["p"])
        with pytest.raises(AnnotationError, match="duplicate image"):
            index.merge(index)


class TestLoadDetections:
    def test_basic(self):
        payload = {
            "img.jpg": [
                {"category": "cat", "bbox": [0, 0, 10, 10], "score": 0.9},
                {"category": "dog", "bbox": [5, 5, 20, 20], "score": 0.8},
            ]
        }
        per_image, skipped = load_detections(payload, ["cat", "dog"])
        assert skipped == []
        insts = per_image["img.jpg"]
        assert [i.instance_id for i in insts] == [0, 1]
        assert insts[0].bbox == Box(0, 0, 10, 10)  # canonical order, no swap
        assert insts[0].score == 0.9

    def test_unknown_category_skipped_keeps_ids(self):
        payload = {
            "img.jpg": [
                {"category": "unknown", "bbox": [0, 0, 1, 1], "score": 0.5},
                {"category": "cat", "bbox": [0, 0, 2, 2], "score": 0.7},
            ]
        }
        per_image, skipped = load_detections(payload, ["cat"])
        assert [(im, i) for im, i, _ in skipped] == [("img.jpg", 0)]
        assert per_image["img.jpg"][0].instance_id == 1

    def test_strict_mode(self):
        payload = {"img.jpg": [{"category": "zz", "bbox": [0, 0, 1, 1], "score": 1.0}]}
        with pytest.raises(AnnotationError, match="zz"):
            load_detections(payload, ["cat"], skip_unknown=False)
