import numpy as np
import pytest

from tamperlab.concentration import ConcentrationScores
from tamperlab.curation import (
    SplitTargets,
    balanced_split,
    describe,
    describe_multi,
    describe_record,
    run_filter_chain,
)
from tamperlab.labeling import CheckVerdict, LabelArtifacts, SizeBucket, size_bucket
from tamperlab.raster import BinaryLabel, FloatMap
from tamperlab.records import (
    EditDescriptor,
    Manipulation,
    SamplePaths,
    SampleRecord,
    SchemaError,
    read_records,
    write_records,
)


def make_record(
    rec_id="s-0001",
    manipulation=Manipulation.INTRA_CLASS_REPLACEMENT,
    tampered_size=100000,
    vlm=9,
    human=None,
    labels=("dog",),
    edits=None,
    retained=False,
    verdicts=(),
):
    if edits is None:
        edits = (EditDescriptor(manipulation=manipulation, orig_class=labels[0]),)
    return SampleRecord(
        id=rec_id,
        paths=SamplePaths(
            original=f"orig/{rec_id}.png",
            tampered=f"gen/{rec_id}.png",
            diff_map=f"diff/{rec_id}.png",
            pixel_label=f"labels/{rec_id}.png",
        ),
        manipulation=manipulation,
        edit_sequence=edits,
        semantic_labels=labels,
        tau=0.05,
        tampered_size=tampered_size,
        size_bucket=size_bucket(tampered_size),
        vlm_fidelity=vlm,
        human_realism=human,
        generator="synthetic",
        verdicts=verdicts,
        description="",
        retained=retained,
    )


def artifacts_for(size, shape=(400, 400)):
    bits = np.zeros(shape, dtype=bool)
    bits.ravel()[:size] = True
    diff = FloatMap(bits.astype(float) * 0.5)
    return LabelArtifacts(
        diff=diff, label=BinaryLabel(bits), tau=0.05, tampered_size=size
    )


CONCENTRATED = ConcentrationScores(r_grid=0.05, r_dens=0.8)
DIVERSE = ConcentrationScores(r_grid=0.7, r_dens=0.1)


class TestDescribe:
    @pytest.mark.parametrize(
        "manipulation,orig,repl,expected",
        [
            (Manipulation.OBJECT_REMOVAL, "car", None, "The car was removed from the image."),
            (
                Manipulation.INTER_CLASS_REPLACEMENT,
                "chair",
                "sofa",
                "The chair was replaced with a sofa.",
            ),
            (
                Manipulation.BACKGROUND_CHANGE,
                None,
                None,
                "The background was changed while keeping the foreground unchanged.",
            ),
            (Manipulation.OBJECT_ADDITION, "bicycle", None, "A bicycle was added to the image."),
            (
                Manipulation.INTRA_CLASS_REPLACEMENT,
                "dog",
                None,
                "The dog was replaced with a different-looking dog.",
            ),
            (Manipulation.COLOR_CHANGE, "shirt", None, "The color of the shirt was changed."),
            (
                Manipulation.MOTION_CHANGE,
                "person",
                None,
                "The person was edited to show a small motion change.",
            ),
            (
                Manipulation.MATERIAL_CHANGE,
                "table",
                None,
                "The material appearance of the table was changed.",
            ),
        ],
    )
    def test_templates_byte_exact(self, manipulation, orig, repl, expected):
        assert describe(manipulation, orig, repl) == expected

    def test_multi_edit_example(self):
        edits = [
            EditDescriptor(Manipulation.OBJECT_REMOVAL, orig_class="car"),
            EditDescriptor(Manipulation.BACKGROUND_CHANGE),
        ]
        assert describe_multi(edits) == (
            "The car was removed from the image.\n"
            "The background was changed while keeping the foreground unchanged."
        )

    def test_multi_edit_order_preserved(self):
        edits = [
            EditDescriptor(Manipulation.OBJECT_REMOVAL, orig_class="car"),
            EditDescriptor(Manipulation.BACKGROUND_CHANGE),
        ]
        fwd = describe_multi(edits)
        rev = describe_multi(list(reversed(edits)))
        assert fwd.splitlines() == list(reversed(rev.splitlines()))

    def test_three_edits_three_lines(self):
        edits = [
            EditDescriptor(Manipulation.COLOR_CHANGE, orig_class="car"),
            EditDescriptor(Manipulation.OBJECT_ADDITION, orig_class="dog"),
            EditDescriptor(Manipulation.BACKGROUND_CHANGE),
        ]
        assert len(describe_multi(edits).splitlines()) == 3

    def test_arity_checked(self):
        one = [EditDescriptor(Manipulation.BACKGROUND_CHANGE)]
        with pytest.raises(ValueError):
            describe_multi(one)
        with pytest.raises(ValueError):
            describe_multi(one * 4)

    def test_missing_replacement_class(self):
        with pytest.raises(ValueError):
            describe(Manipulation.INTER_CLASS_REPLACEMENT, "chair", None)

    def test_unexpected_replacement_class(self):
        with pytest.raises(ValueError):
            describe(Manipulation.OBJECT_REMOVAL, "car", "sofa")

    def test_describe_record_multi(self):
        edits = (
            EditDescriptor(Manipulation.OBJECT_REMOVAL, orig_class="car"),
            EditDescriptor(Manipulation.BACKGROUND_CHANGE),
        )
        rec = make_record(
            manipulation=Manipulation.MULTI_EDIT, edits=edits, labels=("car",)
        )
        assert describe_record(rec).count("\n") == 1


class TestFilterChain:
    def test_all_gates_pass(self):
        rec = make_record(vlm=9, human=4)
        out = run_filter_chain(
            rec,
            artifacts_for(100000),
            guide_mask=BinaryLabel(np.ones((400, 400), dtype=bool)),
            scores=CONCENTRATED,
        )
        assert out.retained
        assert [v.name for v in out.verdicts] == [
            "magnitude",
            "fidelity_vlm",
            "fidelity_human",
            "overlap",
            "concentration",
        ]

    def test_vlm_below_gate(self):
        rec = make_record(vlm=8, human=5)
        out = run_filter_chain(rec, artifacts_for(100000), scores=CONCENTRATED)
        assert not out.retained
        vlm_verdict = next(v for v in out.verdicts if v.name == "fidelity_vlm")
        assert not vlm_verdict.passed

    def test_human_below_gate(self):
        rec = make_record(vlm=10, human=3)
        out = run_filter_chain(rec, artifacts_for(100000), scores=CONCENTRATED)
        assert not out.retained

    def test_pending_review_not_discarded(self):
        rec = make_record(vlm=10, human=None)
        out = run_filter_chain(rec, artifacts_for(100000), scores=CONCENTRATED)
        assert not out.retained
        assert out.pending_review
        human = next(v for v in out.verdicts if v.name == "fidelity_human")
        assert "pending" in human.bounds

    def test_no_guide_mask_skips_overlap(self):
        rec = make_record(vlm=9, human=4, manipulation=Manipulation.COLOR_CHANGE)
        out = run_filter_chain(rec, artifacts_for(100000), scores=CONCENTRATED)
        assert [v.name for v in out.verdicts] == [
            "magnitude",
            "fidelity_vlm",
            "fidelity_human",
            "concentration",
        ]
        assert out.retained

    def test_diverse_label_fails(self):
        rec = make_record(vlm=9, human=4)
        out = run_filter_chain(rec, artifacts_for(100000), scores=DIVERSE)
        assert not out.retained

    def test_magnitude_gate(self):
        rec = make_record(vlm=9, human=4, tampered_size=100)
        out = run_filter_chain(rec, artifacts_for(100), scores=CONCENTRATED)
        assert not out.retained

    def test_overlap_value_reuse(self):
        rec = make_record(vlm=9, human=4)
        out = run_filter_chain(
            rec, artifacts_for(100000), scores=CONCENTRATED, overlap_value=0.5
        )
        assert any(v.name == "overlap" and v.measured == 0.5 for v in out.verdicts)
        assert out.retained


class TestRecordInvariants:
    def test_retained_requires_gates(self):
        good = CheckVerdict(name="x", passed=True, measured=1.0, bounds="-")
        with pytest.raises(ValueError):
            make_record(vlm=8, human=5, retained=True, verdicts=(good,))
        with pytest.raises(ValueError):
            make_record(vlm=9, human=3, retained=True, verdicts=(good,))
        bad = CheckVerdict(name="x", passed=False, measured=1.0, bounds="-")
        with pytest.raises(ValueError):
            make_record(vlm=9, human=4, retained=True, verdicts=(bad,))

    def test_multi_edit_arity(self):
        with pytest.raises(ValueError):
            make_record(
                manipulation=Manipulation.MULTI_EDIT,
                edits=(EditDescriptor(Manipulation.BACKGROUND_CHANGE),),
            )
        with pytest.raises(ValueError):
            make_record(
                manipulation=Manipulation.COLOR_CHANGE,
                edits=(
                    EditDescriptor(Manipulation.COLOR_CHANGE, orig_class="a"),
                    EditDescriptor(Manipulation.BACKGROUND_CHANGE),
                ),
            )

    def test_semantic_labels_required(self):
        with pytest.raises(ValueError):
            make_record(
                labels=(),
                edits=(EditDescriptor(Manipulation.COLOR_CHANGE, orig_class="x"),),
                manipulation=Manipulation.COLOR_CHANGE,
            )

    def test_score_ranges(self):
        with pytest.raises(ValueError):
            make_record(vlm=11)
        with pytest.raises(ValueError):
            make_record(human=0)


class TestJsonl:
    def test_empty_list_empty_file(self, tmp_path):
        p = tmp_path / "records.jsonl"
        write_records([], p)
        assert p.read_bytes() == b""
        assert read_records(p) == []

    def test_round_trip(self, tmp_path):
        p = tmp_path / "records.jsonl"
        rec = run_filter_chain(
            make_record(vlm=9, human=4),
            artifacts_for(100000),
            guide_mask=BinaryLabel(np.ones((400, 400), dtype=bool)),
            scores=CONCENTRATED,
        )
        multi = make_record(
            rec_id="s-0002",
            manipulation=Manipulation.MULTI_EDIT,
            edits=(
                EditDescriptor(Manipulation.OBJECT_REMOVAL, orig_class="car"),
                EditDescriptor(Manipulation.BACKGROUND_CHANGE),
            ),
            labels=("car",),
            human=2,
        )
        write_records([rec, multi], p)
        back = read_records(p)
        assert back == [rec, multi]

    def test_malformed_line_number_reported(self, tmp_path):
        p = tmp_path / "records.jsonl"
        rec = make_record()
        write_records([rec, rec, rec], p)
        lines = p.read_text().splitlines()
        lines[2] = '{"id": "broken"}'
        p.write_text("\n".join(lines) + "\n")
        with pytest.raises(SchemaError) as excinfo:
            read_records(p)
        assert excinfo.value.line == 3
        assert "line 3" in str(excinfo.value)

    def test_json_garbage_line(self, tmp_path):
        p = tmp_path / "records.jsonl"
        write_records([make_record()], p)
        with p.open("a") as fh:
            fh.write("not json\n")
        with pytest.raises(SchemaError) as excinfo:
            read_records(p)
        assert excinfo.value.line == 2

    def test_fixed_field_order(self, tmp_path):
        import json

        p = tmp_path / "records.jsonl"
        write_records([make_record()], p)
        keys = list(json.loads(p.read_text()).keys())
        assert keys == [
            "id",
            "paths",
            "manipulation",
            "edit_sequence",
            "semantic_labels",
            "tau",
            "tampered_size",
            "size_bucket",
            "vlm_fidelity",
            "human_realism",
            "generator",
            "verdicts",
            "description",
            "retained",
        ]


def retained_record(i, bucket, manipulation=Manipulation.COLOR_CHANGE, label="dog"):
    sizes = {SizeBucket.SMALL: 10000, SizeBucket.MEDIUM: 30000, SizeBucket.LARGE: 60000}
    ok = CheckVerdict(name="magnitude", passed=True, measured=1.0, bounds="-")
    return make_record(
        rec_id=f"r-{i:05d}",
        manipulation=manipulation,
        tampered_size=sizes[bucket],
        vlm=9,
        human=4,
        labels=(label,),
        retained=True,
        verdicts=(ok,),
    )


class TestBalancedSplit:
    def test_exact_ratio_pools_select_everything(self):
        records = (
            [retained_record(i, SizeBucket.SMALL) for i in range(40)]
            + [retained_record(100 + i, SizeBucket.MEDIUM) for i in range(30)]
            + [retained_record(200 + i, SizeBucket.LARGE) for i in range(30)]
        )
        ids = balanced_split(records, SplitTargets(), seed=0)
        assert len(ids) == 100
        by_bucket = {b: 0 for b in SizeBucket}
        lookup = {r.id: r for r in records}
        for i in ids:
            by_bucket[lookup[i].size_bucket] += 1
        assert by_bucket[SizeBucket.SMALL] == 40
        assert by_bucket[SizeBucket.MEDIUM] == 30
        assert by_bucket[SizeBucket.LARGE] == 30

    def test_equal_pools_counting_oracle(self):
        # pools 34/33/33: largest feasible N = min(34/.4, 33/.3, 33/.3) = 85;
        # largest-remainder quotas of 85 at 4:3:3 = 34/26/25
        records = (
            [retained_record(i, SizeBucket.SMALL) for i in range(34)]
            + [retained_record(100 + i, SizeBucket.MEDIUM) for i in range(33)]
            + [retained_record(200 + i, SizeBucket.LARGE) for i in range(33)]
        )
        ids = balanced_split(records, SplitTargets(), seed=0)
        lookup = {r.id: r for r in records}
        by_bucket = {b: 0 for b in SizeBucket}
        for i in ids:
            by_bucket[lookup[i].size_bucket] += 1
        assert len(ids) == 85
        assert by_bucket[SizeBucket.SMALL] == 34
        assert by_bucket[SizeBucket.MEDIUM] == 26
        assert by_bucket[SizeBucket.LARGE] == 25

    def test_per_class_cap_enforced(self):
        buckets = [SizeBucket.SMALL, SizeBucket.MEDIUM, SizeBucket.LARGE]
        records = []
        for i in range(600):  # dominant class: 30% of corpus
            records.append(retained_record(i, buckets[i % 3], label="person"))
        for i in range(1400):
            records.append(
                retained_record(1000 + i, buckets[i % 3], label=f"cls{i % 70}")
            )
        ids = balanced_split(records, SplitTargets(per_class_cap=30), seed=1)
        lookup = {r.id: r for r in records}
        person = sum(1 for i in ids if lookup[i].semantic_labels[0] == "person")
        assert person <= 30
        assert person / max(len(ids), 1) <= 0.05 + 1e-9

    def test_deterministic_under_seed(self):
        records = [
            retained_record(
                i,
                [SizeBucket.SMALL, SizeBucket.MEDIUM, SizeBucket.LARGE][i % 3],
                manipulation=list(Manipulation)[i % 8],
            )
            for i in range(200)
        ]
        a = balanced_split(records, SplitTargets(per_class_cap=50), seed=42)
        b = balanced_split(records, SplitTargets(per_class_cap=50), seed=42)
        assert a == b
        c = balanced_split(records, SplitTargets(per_class_cap=50), seed=43)
        assert isinstance(c, list)

    def test_no_duplicate_ids(self):
        records = [
            retained_record(i, [SizeBucket.SMALL, SizeBucket.MEDIUM, SizeBucket.LARGE][i % 3])
            for i in range(90)
        ]
        ids = balanced_split(records, SplitTargets(), seed=3)
        assert len(ids) == len(set(ids))

    def test_type_weights_shift_composition(self):
        records = []
        for i in range(60):
            records.append(
                retained_record(
                    i,
                    [SizeBucket.SMALL, SizeBucket.MEDIUM, SizeBucket.LARGE][i % 3],
                    manipulation=Manipulation.COLOR_CHANGE,
                )
            )
        for i in range(60):
            records.append(
                retained_record(
                    1000 + i,
                    [SizeBucket.SMALL, SizeBucket.MEDIUM, SizeBucket.LARGE][i % 3],
                    manipulation=Manipulation.OBJECT_REMOVAL,
                )
            )
        heavy = SplitTargets(type_weights={"object_removal": 3.0, "color_change": 1.0})
        ids = balanced_split(records, heavy, seed=0)
        lookup = {r.id: r for r in records}
        removal = sum(
            1 for i in ids if lookup[i].manipulation is Manipulation.OBJECT_REMOVAL
        )
        assert removal > len(ids) / 2

    def test_rejects_unretained(self):
        with pytest.raises(ValueError):
            balanced_split([make_record()], SplitTargets(), seed=0)
