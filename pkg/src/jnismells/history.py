"""Mine a git repository: fault-fixing commits, SZZ-style inducing commits and per-release file labels."""

from __future__ import annotations

import contextlib
import os
import re
import shutil
import subprocess
import tempfile
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .lexer import Diagnostic, count_loc
from .source_facts import Language, language_for

# error-related keywords for fix detection; the duplicated "assertion" appears once
DEFAULT_KEYWORDS = (
    "fix", "crash", "resolves", "regression", "fall back", "assertion", "coverity",
    "reproducible", "stack-wanted", "steps-wanted", "testcase", "fail", "npe", "except",
    "broken", "bug", "differential testing", "error", "addresssanitizer", "hang",
    "permaorange", "random orange", "intermittent", "steps to reproduce", "leak",
    "stack trace", "heap overflow", "freez", "str:", "problem ", "overflow", "avoid",
    " issue", "workaround", "break", "stop",
)

LABEL_COLUMNS = ["release", "file", "smelly", "buggy", "loc", "churn", "prior_fixes"]


class HistoryError(RuntimeError):
    pass


@dataclass
class FileChange:
    old_path: str | None  # None for an added file
    new_path: str | None  # None for a deleted file
    added: set[int] = field(default_factory=set)
    deleted: set[tuple[int, str]] = field(default_factory=set)  # against the pre-image
    binary: bool = False

    @property
    def path(self) -> str:
        return self.new_path or self.old_path or ""


@dataclass
class CommitRecord:
    hash: str
    message: str
    timestamp: int
    parents: tuple[str, ...] = ()
    changes: dict[str, FileChange] = field(default_factory=dict)

    @property
    def is_merge(self) -> bool:
        return len(self.parents) >= 2


@dataclass
class FaultLink:
    fix_commit: str
    inducing_commits: set[str] = field(default_factory=set)
    touched_files: set[str] = field(default_factory=set)
    # inducing commit -> files (pre-image paths) whose deleted lines it last touched
    inducing_files: dict[str, set[str]] = field(default_factory=dict)


@dataclass(frozen=True)
class FileMetrics:
    loc: int
    churn: int
    prior_fixes: int


def git(repo: str, *args: str, check: bool = True) -> str:
    cmd = ["git", "-C", repo, "-c", "core.quotepath=false", *args]
    proc = subprocess.run(cmd, capture_output=True, text=True, encoding="utf-8", errors="replace")
    if check and proc.returncode != 0:
        raise HistoryError(f"git {' '.join(args)} failed: {proc.stderr.strip()}")
    return proc.stdout


_HUNK = re.compile(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@")


def _strip_prefix(path: str) -> str | None:
    if path == "/dev/null":
        return None
    return path[2:] if path[:2] in ("a/", "b/") else path


def parse_diff(text: str) -> dict[str, FileChange]:
    """Per-file added line numbers and deleted (line, content) pairs from a ``-U0`` diff."""
    changes: dict[str, FileChange] = {}
    current: FileChange | None = None
    old_line = new_line = 0

    def finish() -> None:
        if current is not None:
            changes[current.path] = current

    for line in text.split("\n"):
        if line.startswith("diff --git "):
            finish()
            m = re.match(r"diff --git a/(.*) b/(.*)$", line)
            a, b = (m.group(1), m.group(2)) if m else ("", "")
            current = FileChange(a, b)
        elif current is None:
            continue
        elif line.startswith("new file mode"):
            current.old_path = None
        elif line.startswith("deleted file mode"):
            current.new_path = None
        elif line.startswith("rename from "):
            current.old_path = line[len("rename from "):]
        elif line.startswith("rename to "):
            current.new_path = line[len("rename to "):]
        elif line.startswith("Binary files ") or line.startswith("GIT binary patch"):
            current.binary = True
        elif line.startswith("--- "):
            current.old_path = _strip_prefix(line[4:])
        elif line.startswith("+++ "):
            current.new_path = _strip_prefix(line[4:])
        elif line.startswith("@@"):
            m = _HUNK.match(line)
            if m:
                old_line, new_line = int(m.group(1)), int(m.group(3))
        elif line.startswith("-"):
            current.deleted.add((old_line, line[1:]))
            old_line += 1
        elif line.startswith("+"):
            current.added.add(new_line)
            new_line += 1
    finish()
    return changes


def read_log(repo: str, rev: str = "HEAD") -> list[CommitRecord]:
    """Commits reachable from ``rev``, oldest first, with their diffs against the first parent."""
    out = git(repo, "log", "--reverse", "--topo-order", "--format=%H%x1f%P%x1f%ct%x1f%B%x1e", rev)
    records = []
    for entry in out.split("\x1e"):
        entry = entry.strip("\n")
        if not entry:
            continue
        h, parents, ts, message = entry.split("\x1f", 3)
        parent_list = tuple(parents.split())
        if parent_list:
            diff = git(repo, "diff", "-U0", "--no-color", "-M", parent_list[0], h)
        else:
            diff = git(repo, "show", "-U0", "--no-color", "--format=", h)
        records.append(CommitRecord(h, message.strip(), int(ts), parent_list, parse_diff(diff)))
    return records


def identify_fix_commits(log: Iterable[CommitRecord], keywords: Sequence[str] = DEFAULT_KEYWORDS,
                         word_boundary: bool = False) -> list[str]:
    """Hashes of non-merge commits whose lowercased message mentions any keyword."""
    if not keywords:
        raise ValueError("keyword list is empty")
    if word_boundary:
        patterns = [re.compile(r"(?<!\w)" + re.escape(k.strip()) + r"(?!\w)") for k in keywords]
        matches = lambda msg: any(p.search(msg) for p in patterns)  # noqa: E731
    else:
        matches = lambda msg: any(k in msg for k in keywords)  # noqa: E731
    return [c.hash for c in log if not c.is_merge and matches(c.message.lower())]


def read_keywords(path: str) -> list[str]:
    """One keyword per line; blank lines are skipped and case is folded."""
    with open(path, encoding="utf-8") as fh:
        words = [line.rstrip("\r\n").lower() for line in fh]
    words = [w for w in words if w.strip()]
    if not words:
        raise ValueError(f"no keywords in {path}")
    return words


def _blame(repo: str, rev: str, path: str, lines: Sequence[int]) -> dict[int, str]:
    args = ["blame", "--porcelain"]
    for n in lines:
        args += ["-L", f"{n},{n}"]
    out = git(repo, *args, rev, "--", path)
    result: dict[int, str] = {}
    for line in out.split("\n"):
        parts = line.split(" ")
        if len(parts) >= 3 and re.fullmatch(r"[0-9a-f]{40}", parts[0]):
            result[int(parts[2])] = parts[0]
    return result


def trace_inducing(fix: CommitRecord, repo: str, diagnostics: list[Diagnostic] | None = None) -> FaultLink:
    """Blame every deleted non-blank line of ``fix`` against its first parent."""
    if not fix.parents:
        raise HistoryError(f"fix commit {fix.hash} has no parent")
    parent = fix.parents[0]
    link = FaultLink(fix.hash)
    for change in sorted(fix.changes.values(), key=lambda c: c.path):
        if change.binary:
            if diagnostics is not None:
                diagnostics.append(Diagnostic(change.path, None, f"binary file skipped in {fix.hash[:12]}"))
            continue
        lines = sorted(n for n, text in change.deleted if text.strip())
        if not lines or change.old_path is None:
            continue
        try:
            blamed = _blame(repo, parent, change.old_path, lines)
        except HistoryError as exc:
            if diagnostics is not None:
                diagnostics.append(Diagnostic(change.old_path, None, f"blame failed: {exc}"))
            continue
        for commit in blamed.values():
            link.inducing_commits.add(commit)
            link.inducing_files.setdefault(commit, set()).add(change.old_path)
        if blamed:
            link.touched_files.add(change.old_path)
    return link


def list_tags(repo: str) -> list[str]:
    return git(repo, "tag", "--list").split()


def resolve_release(repo: str, tag: str) -> str:
    out = git(repo, "rev-parse", "--verify", "--quiet", f"refs/tags/{tag}^{{commit}}", check=False).strip()
    if not out:
        raise HistoryError(f"unknown release tag {tag!r}; available tags: {', '.join(list_tags(repo)) or '(none)'}")
    return out


def release_window(repo: str, releases: Sequence[str], index: int) -> set[str]:
    """Commits in (r_k, r_k+1]; the last release's window runs to HEAD."""
    start = resolve_release(repo, releases[index])
    end = resolve_release(repo, releases[index + 1]) if index + 1 < len(releases) else "HEAD"
    return set(git(repo, "rev-list", f"{start}..{end}").split())


def snapshot_files(repo: str, release: str) -> list[str]:
    """Java and C/C++ paths in the release tree."""
    names = git(repo, "ls-tree", "-r", "--name-only", resolve_release(repo, release)).splitlines()
    return sorted(p for p in names if language_for(p) is not Language.OTHER)


def label_files(releases: Sequence[str], links: Iterable[FaultLink], repo: str,
                tag_fix_files: bool = False) -> dict[tuple[str, str], int]:
    """Buggy flag per (release, file) for the source files of each release snapshot.

    A file is buggy in release r_k when an inducing commit that touched it lies in
    (r_k, r_k+1]. With ``tag_fix_files`` the fix commit and the files it touched are
    used instead.
    """
    links = list(links)
    for tag in releases:
        resolve_release(repo, tag)
    touched_by: dict[str, set[str]] = defaultdict(set)
    for link in links:
        if tag_fix_files:
            touched_by[link.fix_commit] |= link.touched_files
        else:
            for commit, files in link.inducing_files.items():
                touched_by[commit] |= files
    labels: dict[tuple[str, str], int] = {}
    for k, tag in enumerate(releases):
        window = release_window(repo, releases, k)
        buggy = set()
        for commit in window & set(touched_by):
            buggy |= touched_by[commit]
        for path in snapshot_files(repo, tag):
            labels[(tag, path)] = int(path in buggy)
    return labels


def release_metrics(release: str, repo: str, fix_hashes: Iterable[str]) -> dict[str, FileMetrics]:
    """LOC, churn and prior fix count for every source file present at the release."""
    rev = resolve_release(repo, release)
    fixes = set(fix_hashes)
    churn: dict[str, int] = defaultdict(int)
    prior: dict[str, int] = defaultdict(int)
    out = git(repo, "log", "--numstat", "--no-renames", "--format=%x1e%H", rev)
    for block in out.split("\x1e"):
        lines = [l for l in block.split("\n") if l.strip()]
        if not lines:
            continue
        commit = lines[0].strip()
        for row in lines[1:]:
            added, deleted, path = row.split("\t", 2)
            if added != "-":
                churn[path] += int(added) + int(deleted)
            if commit in fixes:
                prior[path] += 1
    metrics = {}
    for path in snapshot_files(repo, release):
        text = git(repo, "show", f"{rev}:{path}")
        metrics[path] = FileMetrics(count_loc(text), churn[path], prior[path])
    return metrics


def file_metrics(release: str, path: str, repo: str, fix_hashes: Iterable[str]) -> FileMetrics | None:
    """Metrics for one file, or None when it is absent from the release snapshot."""
    return release_metrics(release, repo, fix_hashes).get(path)


@contextlib.contextmanager
def materialize(repo: str, release: str) -> Iterator[str]:
    """Check ``release`` out into a detached temporary worktree, removed on exit."""
    rev = resolve_release(repo, release)
    base = tempfile.mkdtemp(prefix="jnismells-")
    path = os.path.join(base, "tree")
    git(repo, "worktree", "add", "--detach", "--quiet", path, rev)
    try:
        yield path
    finally:
        git(repo, "worktree", "remove", "--force", path, check=False)
        shutil.rmtree(base, ignore_errors=True)
        git(repo, "worktree", "prune", check=False)
