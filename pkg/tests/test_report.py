import os

import pytest

from jnismells.binding import CodebaseModel, build_model, load_codebase
from jnismells.lexer import count_loc
from jnismells.report import (
    ReportError,
    emit_csv,
    emit_json,
    match_truth,
    read_occurrences_csv,
    read_report_json,
    read_summary_csv,
    read_truth_csv,
    summarize,
    validation_metrics,
    write_report,
)
from jnismells.rules import SmellOccurrence, SmellType, detect_all
from jnismells.source_facts import Language, SourceFile, language_for

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")
PILOT = os.path.join(FIXTURES, "pilot")
GOLDEN = os.path.join(FIXTURES, "golden")


def model_of(files: dict[str, str]) -> CodebaseModel:
    sources = [(SourceFile(p, language_for(p), count_loc(t), "r1"), t) for p, t in files.items()]
    return build_model(sources, "r1")


TWO_FILES = {
    "A.java": 'class A {\n  static { System.loadLibrary("a"); }\n  native void f();\n  void g() { f(); }\n}\n',
    "a.c": "#include <jni.h>\nvoid Java_A_f(JNIEnv *env, jobject o) {\n}\n",
    "notes.c": "int main(void) { return 0; }\n",
}


def test_two_jni_files_one_smelly():
    model = model_of(TWO_FILES)
    report = summarize(detect_all(model), model)
    assert [f.file_path for f in report.files] == ["A.java", "a.c"]
    assert report.pct_jni_files_smelly == 0.5
    assert report.pct_by_type[SmellType.NOT_SECURING_LIBRARIES] == 1.0


def test_density_per_kloc():
    text = "#include <jni.h>\nvoid f(JNIEnv *env) {\n" + "int x;\n" * 1226 + "}\n"
    model = model_of({"big.c": text})
    assert model.files[0].loc == 1229
    occ = [SmellOccurrence(SmellType.NOT_HANDLING_EXCEPTIONS, "big.c", "f", line=i + 3) for i in range(10)]
    assert round(summarize(occ, model).density_per_kloc, 2) == 8.14


def test_empty_report_is_all_zero_and_header_only():
    model = model_of({"a.c": "#include <jni.h>\nvoid f(JNIEnv *env) {}\n"})
    report = summarize([], model)
    assert report.pct_jni_files_smelly == 0 and report.density_per_kloc == 0
    assert all(v == 0 for v in report.pct_by_type.values())
    empty = summarize([], model_of({}))
    occ_csv = emit_csv(empty)["r1.occurrences.csv"]
    assert occ_csv.count(b"\r\n") == 1


def test_unknown_file_is_an_error():
    model = model_of(TWO_FILES)
    with pytest.raises(ReportError):
        summarize([SmellOccurrence(SmellType.NOT_HANDLING_EXCEPTIONS, "ghost.c", "f")], model)


def test_one_occurrence_two_rows():
    model = model_of(TWO_FILES)
    report = summarize(detect_all(model), model)
    assert len(report.occurrences) == 1
    summary = emit_csv(report)["r1.summary.csv"].decode().splitlines()
    assert len(summary) == 3


@pytest.mark.parametrize("counts, expected", [
    ((3293, 137, 250), (0.960, 0.929)),
    ((32, 0, 0), (1.0, 1.0)),
    ((0, 0, 5), (None, 0.0)),
])
def test_validation_metrics(counts, expected):
    precision, recall = validation_metrics(*counts)
    for got, want in zip((precision, recall), expected):
        assert (got is None and want is None) or round(got, 3) == want


def test_validation_metrics_rejects_all_zero():
    with pytest.raises(ValueError):
        validation_metrics(0, 0, 0)


def pilot_report():
    model = load_codebase(PILOT, "pilot")
    return summarize(detect_all(model), model)


def test_pilot_matches_golden_csv():
    outputs = emit_csv(pilot_report())
    for name, data in outputs.items():
        with open(os.path.join(GOLDEN, name), "rb") as fh:
            assert data == fh.read(), name


def test_round_trips():
    report = pilot_report()
    csvs = emit_csv(report)
    assert read_occurrences_csv(csvs["pilot.occurrences.csv"]) == report.occurrences
    assert read_summary_csv(csvs["pilot.summary.csv"]) == report.files
    back = read_report_json(emit_json(report))
    assert back.occurrences == report.occurrences
    assert back.files == report.files


def test_conservation_and_ranges():
    report = pilot_report()
    for t in SmellType:
        assert sum(f.counts[t] for f in report.files) == sum(1 for o in report.occurrences if o.smell_type is t)
        assert 0.0 <= report.pct_by_type[t] <= 1.0


def test_write_report(tmp_path):
    paths = write_report(pilot_report(), str(tmp_path), "both")
    assert sorted(os.path.basename(p) for p in paths) == [
        "pilot.occurrences.csv", "pilot.report.json", "pilot.summary.csv"]
    assert not [p for p in os.listdir(tmp_path) if p.startswith(".tmp-")]


def test_truth_matching_is_a_multiset():
    keys, truth = read_truth_csv(os.path.join(PILOT, "truth.csv"))
    report = pilot_report()
    assert match_truth(report.occurrences, keys, truth) == (18, 0, 0)
    assert match_truth(report.occurrences[1:], keys, truth) == (17, 0, 1)
    assert match_truth(report.occurrences + report.occurrences[:1], keys, truth) == (18, 1, 0)


def test_pilot_has_every_smell():
    assert {o.smell_type for o in pilot_report().occurrences} == set(SmellType)


def test_language_is_recorded():
    assert model_of(TWO_FILES).files[0].language is Language.JAVA
