"""End-to-end plumbing: detection on a tree, release labeling and the statistics battery over CSVs."""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field
from typing import Sequence

from .binding import load_codebase
from .history import (
    LABEL_COLUMNS,
    DEFAULT_KEYWORDS,
    identify_fix_commits,
    label_files,
    materialize,
    read_log,
    release_metrics,
    trace_inducing,
)
from .lexer import Diagnostic
from .report import ReleaseReport, atomic_write, read_summary_csv, summarize, write_report
from .rules import DetectionConfig, SmellType, detect_all
from .stats import (
    ContingencyTable,
    FeatureMatrix,
    FisherResult,
    RegressionResult,
    fisher_exact,
    logistic_fit,
    prevalence,
    prune_collinear,
    rank_smells,
)

FISHER_COLUMNS = ["release", "sb", "bns", "snb", "nbns", "or", "p", "ci_low", "ci_high", "significant"]
REGRESSION_COLUMNS = ["system", "term", "coef", "stderr", "z", "p"]
RANKING_COLUMNS = ["smell_type", "models", "positive", "pct_positive", "top5", "significant_positive"]
SYSTEM_FILE = "system.txt"
CONTROLS = ("loc", "prior_fixes")


def detect_tree(root: str, release_id: str, config: DetectionConfig,
                diagnostics: list[Diagnostic]) -> ReleaseReport:
    model = load_codebase(root, release_id, diagnostics)
    return summarize(detect_all(model, config, diagnostics), model)


def _fmt(x: float | None) -> str:
    if x is None:
        return "NA"
    return repr(float(x))


def _csv(header: list[str], rows: list[list]) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue().encode("utf-8")


def _read_csv(path: str) -> list[dict[str, str]]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def history_labels(repo: str, releases: Sequence[str], reports: dict[str, ReleaseReport],
                   keywords: Sequence[str] = DEFAULT_KEYWORDS,
                   diagnostics: list[Diagnostic] | None = None) -> list[dict]:
    """One labels row per JNI file of each release."""
    log = read_log(repo)
    fixes = identify_fix_commits(log, keywords)
    by_hash = {c.hash: c for c in log}
    links = [trace_inducing(by_hash[h], repo, diagnostics) for h in fixes if by_hash[h].parents]
    labels = label_files(releases, links, repo)
    rows = []
    for tag in releases:
        metrics = release_metrics(tag, repo, fixes)
        for f in reports[tag].files:
            m = metrics.get(f.file_path)
            if m is None:
                continue
            rows.append({"release": tag, "file": f.file_path, "smelly": int(f.smelly),
                         "buggy": labels.get((tag, f.file_path), 0), "loc": m.loc,
                         "churn": m.churn, "prior_fixes": m.prior_fixes})
    return rows


def run_history(repo: str, releases: Sequence[str], config: DetectionConfig, out_dir: str,
                fmt: str = "csv", keywords: Sequence[str] = DEFAULT_KEYWORDS,
                diagnostics: list[Diagnostic] | None = None) -> list[str]:
    """Detect per release in temporary worktrees, label files, then run the statistics."""
    diags = [] if diagnostics is None else diagnostics
    reports: dict[str, ReleaseReport] = {}
    written: list[str] = []
    for tag in releases:
        with materialize(repo, tag) as tree:
            reports[tag] = detect_tree(tree, tag, config, diags)
        written += write_report(reports[tag], out_dir, "both" if fmt == "both" else fmt)
        if fmt == "json":
            # the statistics read the summary CSV, so it is always written
            written += write_report(reports[tag], out_dir, "csv")
    rows = history_labels(repo, releases, reports, keywords, diags)
    path = os.path.join(out_dir, "labels.csv")
    atomic_write(path, _csv(LABEL_COLUMNS, [[r[c] for c in LABEL_COLUMNS] for r in rows]))
    written.append(path)
    # name the system after the repository rather than wherever the output lands
    path = os.path.join(out_dir, SYSTEM_FILE)
    atomic_write(path, (os.path.basename(os.path.abspath(repo)) + "\n").encode("utf-8"))
    written.append(path)
    written += run_stats(out_dir, out_dir, diags)
    return sorted(set(written))


# ---------------------------------------------------------------------------
# statistics over produced CSVs


@dataclass
class SystemData:
    system: str
    labels: list[dict[str, str]]
    counts: dict[tuple[str, str], dict[str, int]] = field(default_factory=dict)


def load_system(directory: str) -> SystemData:
    labels = _read_csv(os.path.join(directory, "labels.csv"))
    counts: dict[tuple[str, str], dict[str, int]] = {}
    for name in sorted(os.listdir(directory)):
        if name.endswith(".summary.csv"):
            with open(os.path.join(directory, name), "rb") as fh:
                for s in read_summary_csv(fh.read()):
                    counts[(s.release_id, s.file_path)] = {t.value: s.counts[t] for t in SmellType}
    return SystemData(_system_name(directory), labels, counts)


def _system_name(directory: str) -> str:
    try:
        with open(os.path.join(directory, SYSTEM_FILE), encoding="utf-8") as fh:
            name = fh.read().strip()
    except FileNotFoundError:
        name = ""
    return name or os.path.basename(os.path.abspath(directory))


def find_systems(directory: str) -> list[str]:
    """``directory`` itself when it holds labels.csv, else its immediate subdirectories that do."""
    if os.path.exists(os.path.join(directory, "labels.csv")):
        return [directory]
    subdirs = [os.path.join(directory, d) for d in sorted(os.listdir(directory))]
    found = [d for d in subdirs if os.path.isfile(os.path.join(d, "labels.csv"))]
    if not found:
        raise FileNotFoundError(f"no labels.csv under {directory}")
    return found


def fisher_by_release(labels: list[dict[str, str]]) -> list[tuple[str, ContingencyTable, FisherResult]]:
    cells: dict[str, list[int]] = {}
    for row in labels:
        smelly, buggy = row["smelly"] == "1", row["buggy"] == "1"
        c = cells.setdefault(row["release"], [0, 0, 0, 0])
        c[(0 if buggy else 2) + (0 if smelly else 1)] += 1
    out = []
    for release, (sb, bns, snb, nbns) in cells.items():
        table = ContingencyTable(sb, bns, snb, nbns)
        out.append((release, table, fisher_exact(table)))
    return out


def feature_matrix(data: SystemData) -> FeatureMatrix:
    """Smelly file-release rows: smell counts and controls against the buggy flag."""
    smells = [t.value for t in SmellType]
    rows, ids = [], []
    for row in data.labels:
        if row["smelly"] != "1":
            continue
        key = (row["release"], row["file"])
        counts = data.counts.get(key, {})
        rows.append({**{s: counts.get(s, 0) for s in smells},
                     "loc": float(row["loc"]), "prior_fixes": float(row["prior_fixes"]),
                     "buggy": float(row["buggy"])})
        ids.append(f"{key[0]}:{key[1]}")
    return FeatureMatrix.from_rows(rows, smells + list(CONTROLS), "buggy", ids)


def fit_system(data: SystemData, diagnostics: list[Diagnostic]) -> RegressionResult | None:
    matrix = feature_matrix(data)
    smells = [t.value for t in SmellType]
    pruned = prune_collinear(matrix, 0.6, prevalence(matrix), candidates=smells)
    # constant controls carry no information either
    pruned = pruned.without([c for c in CONTROLS if c in pruned.columns
                             and len(set(pruned.column(c).tolist())) <= 1])
    if len(pruned.y) < len(pruned.columns) + 1 or len(set(pruned.y.tolist())) < 2:
        diagnostics.append(Diagnostic(data.system, None,
                                      f"regression skipped: {len(pruned.y)} smelly rows, "
                                      f"{len(pruned.columns)} columns"))
        return None
    result = logistic_fit(pruned)
    if result.separated:
        diagnostics.append(Diagnostic(data.system, None, "regression shows separation; coefficients unstable"))
    for term in result.aliased:
        diagnostics.append(Diagnostic(data.system, None, f"{term}: NA due to singularities"))
    return result


def run_stats(directory: str, out_dir: str, diagnostics: list[Diagnostic]) -> list[str]:
    fisher_rows, regression_rows = [], []
    fits: list[tuple[str, RegressionResult]] = []
    for system_dir in find_systems(directory):
        data = load_system(system_dir)
        for release, t, r in fisher_by_release(data.labels):
            ci = r.log_or_ci or (None, None)
            fisher_rows.append([release, t.sb, t.bns, t.snb, t.nbns, _fmt(r.odds_ratio), _fmt(r.p_value),
                                _fmt(ci[0]), _fmt(ci[1]), int(r.significant)])
        result = fit_system(data, diagnostics)
        if result is None:
            continue
        fits.append((data.system, result))
        for term in result.terms:
            regression_rows.append([data.system, term, _fmt(result.coefficients[term]),
                                    _fmt(result.std_errors[term]), _fmt(result.z_scores[term]),
                                    _fmt(result.p_values[term])])
    ranking = rank_smells(fits, [t.value for t in SmellType])
    ranking_rows = [[r.smell, r.models, r.positive, _fmt(r.pct_positive), r.top5, r.significant_positive]
                    for r in ranking]
    outputs = {
        "fisher.csv": _csv(FISHER_COLUMNS, fisher_rows),
        "regression.csv": _csv(REGRESSION_COLUMNS, regression_rows),
        "ranking.csv": _csv(RANKING_COLUMNS, ranking_rows),
    }
    written = []
    for name, data in outputs.items():
        path = os.path.join(out_dir, name)
        atomic_write(path, data)
        written.append(path)
    return written
