"""Per-file and per-release aggregation of smell occurrences, and their serialization."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

from .binding import CodebaseModel, MatchKind
from .rules import SmellOccurrence, SmellType

OCCURRENCE_COLUMNS = ["release", "file", "class", "method", "parameter", "smell_type", "line", "evidence"]
SUMMARY_COLUMNS = ["release", "file", "is_jni", "loc"] + [t.value for t in SmellType] + ["smelly"]
TRUTH_KEYS = ("file", "smell_type", "class", "method", "parameter", "line")


class ReportError(ValueError):
    pass


@dataclass(frozen=True)
class FileSummary:
    file_path: str
    release_id: str
    is_jni: bool
    smelly: bool
    counts: dict[SmellType, int] = field(hash=False)
    loc: int = 0


@dataclass
class ReleaseReport:
    release_id: str
    files: list[FileSummary]
    pct_jni_files_smelly: float
    density_per_kloc: float
    pct_by_type: dict[SmellType, float]
    occurrences: list[SmellOccurrence] = field(default_factory=list)


def jni_files(model: CodebaseModel) -> set[str]:
    """Files that take part in Java/native interaction."""
    paths: set[str] = set()
    for cls in model.java_classes:
        if cls.native_decls or cls.library_loads or cls.native_call_sites:
            paths.add(cls.file.path)
    for f in model.native_functions:
        if f.jni_api_calls or f.follows_jni_convention:
            paths.add(f.file.path)
    for b in model.bindings:
        if b.match_kind is not MatchKind.UNMATCHED:
            paths.update(impl.file.path for impl in b.impls)
    return paths


def summarize(occurrences: Iterable[SmellOccurrence], model: CodebaseModel) -> ReleaseReport:
    occurrences = list(occurrences)
    known = {f.path: f for f in model.files}
    jni = jni_files(model)
    per_file: dict[str, Counter[SmellType]] = {p: Counter() for p in jni}
    for occ in occurrences:
        if occ.file_path not in known:
            raise ReportError(f"occurrence refers to unknown file {occ.file_path}")
        if occ.file_path not in per_file:
            raise ReportError(f"occurrence in non-JNI file {occ.file_path}")
        per_file[occ.file_path][occ.smell_type] += 1

    files = []
    for path in sorted(per_file):
        counts = {t: per_file[path][t] for t in SmellType}
        files.append(FileSummary(path, model.release_id, True, sum(counts.values()) > 0, counts, known[path].loc))

    smelly = [f for f in files if f.smelly]
    jni_loc = sum(f.loc for f in files)
    pct_by_type = {
        t: (sum(1 for f in smelly if f.counts[t]) / len(smelly)) if smelly else 0.0
        for t in SmellType
    }
    return ReleaseReport(
        release_id=model.release_id,
        files=files,
        pct_jni_files_smelly=len(smelly) / len(files) if files else 0.0,
        density_per_kloc=len(occurrences) / (jni_loc / 1000) if jni_loc else 0.0,
        pct_by_type=pct_by_type,
        occurrences=sorted(occurrences, key=SmellOccurrence.sort_key),
    )


def validation_metrics(true_positives: int, false_positives: int,
                       false_negatives: int) -> tuple[float | None, float | None]:
    """(precision, recall); a component is None when its denominator is zero."""
    if min(true_positives, false_positives, false_negatives) < 0:
        raise ValueError("counts must be non-negative")
    if true_positives + false_positives + false_negatives == 0:
        raise ValueError("at least one count must be positive")
    tp_fp = true_positives + false_positives
    tp_fn = true_positives + false_negatives
    precision = true_positives / tp_fp if tp_fp else None
    recall = true_positives / tp_fn if tp_fn else None
    return precision, recall


# ---------------------------------------------------------------------------
# serialization


def _csv_bytes(header: list[str], rows: Iterable[list]) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue().encode("utf-8")


def _occurrence_row(o: SmellOccurrence) -> list:
    return [o.release_id, o.file_path, o.fqcn_or_symbol, o.method_name or "", o.param_name or "",
            o.smell_type.value, "" if o.line is None else o.line, o.evidence]


def occurrences_csv(report: ReleaseReport) -> bytes:
    return _csv_bytes(OCCURRENCE_COLUMNS, (_occurrence_row(o) for o in report.occurrences))


def summary_csv(report: ReleaseReport) -> bytes:
    rows = ([f.release_id, f.file_path, int(f.is_jni), f.loc] + [f.counts[t] for t in SmellType] + [int(f.smelly)]
            for f in report.files)
    return _csv_bytes(SUMMARY_COLUMNS, rows)


def emit_csv(report: ReleaseReport) -> dict[str, bytes]:
    """Both CSV files keyed by their file name."""
    return {
        f"{report.release_id}.occurrences.csv": occurrences_csv(report),
        f"{report.release_id}.summary.csv": summary_csv(report),
    }


def _ratio(x: float) -> float:
    return round(x, 4)


def report_to_dict(report: ReleaseReport) -> dict:
    return {
        "release": report.release_id,
        "pct_jni_files_smelly": _ratio(report.pct_jni_files_smelly),
        "density_per_kloc": _ratio(report.density_per_kloc),
        "pct_by_type": {t.value: _ratio(report.pct_by_type[t]) for t in SmellType},
        "files": [
            {"release": f.release_id, "file": f.file_path, "is_jni": f.is_jni, "loc": f.loc,
             "counts": {t.value: f.counts[t] for t in SmellType}, "smelly": f.smelly}
            for f in report.files
        ],
        "occurrences": [dict(zip(OCCURRENCE_COLUMNS, _occurrence_row(o))) for o in report.occurrences],
    }


def emit_json(report: ReleaseReport) -> bytes:
    return (json.dumps(report_to_dict(report), indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def _occurrence_from_row(row: dict[str, str]) -> SmellOccurrence:
    line = row["line"]
    return SmellOccurrence(
        smell_type=SmellType(row["smell_type"]),
        file_path=row["file"],
        fqcn_or_symbol=row["class"],
        method_name=row["method"] or None,
        param_name=row["parameter"] or None,
        line=int(line) if line not in ("", None) else None,
        evidence=row["evidence"],
        release_id=row["release"],
    )


def read_occurrences_csv(data: bytes) -> list[SmellOccurrence]:
    reader = csv.DictReader(io.StringIO(data.decode("utf-8"), newline=""))
    if reader.fieldnames != OCCURRENCE_COLUMNS:
        raise ReportError(f"unexpected occurrence columns {reader.fieldnames}")
    return [_occurrence_from_row(row) for row in reader]


def read_summary_csv(data: bytes) -> list[FileSummary]:
    reader = csv.DictReader(io.StringIO(data.decode("utf-8"), newline=""))
    if reader.fieldnames != SUMMARY_COLUMNS:
        raise ReportError(f"unexpected summary columns {reader.fieldnames}")
    return [
        FileSummary(row["file"], row["release"], row["is_jni"] == "1", row["smelly"] == "1",
                    {t: int(row[t.value]) for t in SmellType}, int(row["loc"]))
        for row in reader
    ]


def read_report_json(data: bytes) -> ReleaseReport:
    d = json.loads(data.decode("utf-8"))
    files = [FileSummary(f["file"], f["release"], f["is_jni"], f["smelly"],
                         {t: f["counts"][t.value] for t in SmellType}, f["loc"]) for f in d["files"]]
    return ReleaseReport(
        release_id=d["release"],
        files=files,
        pct_jni_files_smelly=d["pct_jni_files_smelly"],
        density_per_kloc=d["density_per_kloc"],
        pct_by_type={t: d["pct_by_type"][t.value] for t in SmellType},
        occurrences=[_occurrence_from_row({k: str(v) for k, v in o.items()}) for o in d["occurrences"]],
    )


def atomic_write(path: str, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_report(report: ReleaseReport, out_dir: str, fmt: str = "both") -> list[str]:
    """Write the report files for ``fmt`` in {"csv", "json", "both"}; returns the paths written."""
    outputs: dict[str, bytes] = {}
    if fmt in ("csv", "both"):
        outputs.update(emit_csv(report))
    if fmt in ("json", "both"):
        outputs[f"{report.release_id}.report.json"] = emit_json(report)
    written = []
    for name, data in outputs.items():
        path = os.path.join(out_dir, name)
        atomic_write(path, data)
        written.append(path)
    return written


# ---------------------------------------------------------------------------
# validation against a ground-truth list


def read_truth_csv(path: str) -> tuple[list[str], list[dict[str, str]]]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        keys = [k for k in TRUTH_KEYS if k in (reader.fieldnames or [])]
        if "file" not in keys or "smell_type" not in keys:
            raise ReportError("truth CSV needs at least 'file' and 'smell_type' columns")
        rows = list(reader)
    for row in rows:
        SmellType(row["smell_type"])
    return keys, rows


def _occurrence_key(o: SmellOccurrence, keys: list[str]) -> tuple[str, ...]:
    values = {
        "file": o.file_path,
        "smell_type": o.smell_type.value,
        "class": o.fqcn_or_symbol,
        "method": o.method_name or "",
        "parameter": o.param_name or "",
        "line": "" if o.line is None else str(o.line),
    }
    return tuple(values[k] for k in keys)


def match_truth(occurrences: Iterable[SmellOccurrence], keys: list[str],
                truth: Iterable[dict[str, str]]) -> tuple[int, int, int]:
    """(TP, FP, FN) of detected occurrences against expected rows, as multisets over ``keys``."""
    found = Counter(_occurrence_key(o, keys) for o in occurrences)
    expected = Counter(tuple((row.get(k) or "").strip() for k in keys) for row in truth)
    tp = sum((found & expected).values())
    return tp, sum(found.values()) - tp, sum(expected.values()) - tp
