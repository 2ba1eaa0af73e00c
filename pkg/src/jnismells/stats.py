"""Fisher's exact test, Spearman correlation, collinearity pruning and logistic regression."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

Z_95 = 1.96
INTERCEPT = "(Intercept)"
SINGULAR = "NA due to singularities"


@dataclass(frozen=True)
class ContingencyTable:
    sb: int  # smelly and buggy
    bns: int  # buggy, not smelly
    snb: int  # smelly, not buggy
    nbns: int  # neither

    def __post_init__(self) -> None:
        cells = (self.sb, self.bns, self.snb, self.nbns)
        if any(not isinstance(c, (int, np.integer)) or c < 0 for c in cells):
            raise ValueError(f"cells must be non-negative integers: {cells}")
        if sum(cells) == 0:
            raise ValueError("contingency table is empty")


@dataclass(frozen=True)
class FisherResult:
    odds_ratio: float | None  # math.inf when only the off-diagonal product is zero
    p_value: float
    log_or_ci: tuple[float, float] | None
    significant: bool


def fisher_exact(table: ContingencyTable) -> FisherResult:
    """Two-sided Fisher test (sum of tables no more probable than the observed one)."""
    a, b, c, d = table.sb, table.bns, table.snb, table.nbns
    smelly, buggy, n = a + c, a + b, a + b + c + d

    # hypergeometric over the sb cell with all margins fixed, in exact integers
    lo, hi = max(0, smelly - (n - buggy)), min(smelly, buggy)
    weights = {x: math.comb(buggy, x) * math.comb(n - buggy, smelly - x) for x in range(lo, hi + 1)}
    observed = weights[a]
    total = math.comb(n, smelly)
    slack = 10 ** 12
    tail = sum(w for w in weights.values() if w * slack <= observed * (slack + 1))
    p = min(1.0, tail / total)

    margins = (smelly, n - smelly, buggy, n - buggy)
    if min(margins) == 0:
        return FisherResult(None, p, None, False)
    num, den = a * d, b * c
    if den == 0:
        odds = math.inf
    else:
        odds = num / den
    ci = None
    if min(a, b, c, d) > 0:
        centre = math.log(odds)
        half = Z_95 * math.sqrt(1 / a + 1 / b + 1 / c + 1 / d)
        ci = (centre - half, centre + half)
    significant = p < 0.05 and ci is not None and (ci[0] > 0 or ci[1] < 0)
    return FisherResult(odds, p, ci, significant)


def mid_ranks(values: Sequence[float]) -> list[float]:
    """1-based ranks with ties given the average of the positions they span."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> float | None:
    if len(x) != len(y):
        raise ValueError("sequences differ in length")
    if len(x) < 3:
        raise ValueError("need at least three observations")
    rx, ry = mid_ranks(list(x)), mid_ranks(list(y))
    mx, my = sum(rx) / len(rx), sum(ry) / len(ry)
    sxy = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    sxx = sum((a - mx) ** 2 for a in rx)
    syy = sum((b - my) ** 2 for b in ry)
    if sxx == 0 or syy == 0:
        return None
    return max(-1.0, min(1.0, sxy / math.sqrt(sxx * syy)))


@dataclass
class FeatureMatrix:
    columns: list[str]
    X: np.ndarray
    y: np.ndarray
    row_ids: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.X = np.asarray(self.X, dtype=float).reshape(len(self.y), len(self.columns))
        self.y = np.asarray(self.y, dtype=float)
        if len(set(self.columns)) != len(self.columns):
            raise ValueError("duplicate column names")

    def column(self, name: str) -> np.ndarray:
        return self.X[:, self.columns.index(name)]

    def without(self, names: Iterable[str]) -> "FeatureMatrix":
        drop = set(names)
        keep = [i for i, c in enumerate(self.columns) if c not in drop]
        return FeatureMatrix([self.columns[i] for i in keep], self.X[:, keep], self.y.copy(), list(self.row_ids))

    @classmethod
    def from_rows(cls, rows: Sequence[Mapping[str, float]], columns: Sequence[str], response: str,
                  row_ids: Sequence[str] = ()) -> "FeatureMatrix":
        X = np.array([[float(r[c]) for c in columns] for r in rows], dtype=float).reshape(len(rows), len(columns))
        y = np.array([float(r[response]) for r in rows], dtype=float)
        return cls(list(columns), X, y, list(row_ids))


def prevalence(matrix: FeatureMatrix) -> dict[str, float]:
    """Share of rows in which each column is non-zero."""
    n = max(len(matrix.y), 1)
    return {c: float(np.count_nonzero(matrix.column(c))) / n for c in matrix.columns}


def prune_collinear(matrix: FeatureMatrix, threshold: float = 0.6,
                    prevalence_by_column: Mapping[str, float] | None = None,
                    candidates: Iterable[str] | None = None) -> FeatureMatrix:
    """Repeatedly drop the less prevalent member of the most correlated pair.

    Only ``candidates`` (default: every column) take part; constant candidate
    columns are dropped first since their correlation is undefined.
    """
    prev = dict(prevalence(matrix))
    prev.update(prevalence_by_column or {})
    pool = [c for c in matrix.columns if candidates is None or c in set(candidates)]
    constant = [c for c in pool if len(set(matrix.column(c).tolist())) <= 1]
    matrix = matrix.without(constant)
    pool = [c for c in pool if c not in constant]
    if len(matrix.y) < 3:
        return matrix
    while True:
        pairs = []
        for i, a in enumerate(pool):
            for b in pool[i + 1:]:
                rho = spearman(matrix.column(a).tolist(), matrix.column(b).tolist())
                if rho is not None and abs(rho) >= threshold:
                    first, second = sorted((a, b))
                    pairs.append((-abs(rho), first, second))
        if not pairs:
            return matrix
        _, a, b = min(pairs)
        # keep the more prevalent column; on a tie keep the name that sorts first
        loser = a if prev.get(a, 0.0) < prev.get(b, 0.0) else b
        matrix = matrix.without([loser])
        pool.remove(loser)


@dataclass
class RegressionResult:
    terms: list[str]
    coefficients: dict[str, float | None]
    std_errors: dict[str, float | None]
    z_scores: dict[str, float | None]
    p_values: dict[str, float | None]
    null_deviance: float
    residual_deviance: float
    aic: float
    fitted: np.ndarray
    converged: bool
    iterations: int
    separated: bool = False
    aliased: list[str] = field(default_factory=list)
    df_null: int = 0
    df_residual: int = 0

    @property
    def estimated(self) -> list[str]:
        return [t for t in self.terms if self.coefficients[t] is not None]


def _sigmoid(eta: np.ndarray) -> np.ndarray:
    out = np.empty_like(eta)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    e = np.exp(eta[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _bernoulli_deviance(y: np.ndarray, mu: np.ndarray) -> float:
    total = 0.0
    for yi, mi in zip(y.tolist(), mu.tolist()):
        if yi > 0:
            total += yi * math.log(mi) if mi > 0 else -math.inf
        if yi < 1:
            total += (1 - yi) * math.log(1 - mi) if mi < 1 else -math.inf
    return -2.0 * total


def _independent_columns(X: np.ndarray) -> list[int]:
    """Greedy left-to-right selection of linearly independent columns."""
    keep: list[int] = []
    scale = max(1.0, float(np.abs(X).max()) if X.size else 1.0)
    for j in range(X.shape[1]):
        trial = X[:, keep + [j]]
        if np.linalg.matrix_rank(trial, tol=1e-9 * scale * max(X.shape)) == len(keep) + 1:
            keep.append(j)
    return keep


def logistic_fit(matrix: FeatureMatrix, max_iter: int = 50, tol: float = 1e-8) -> RegressionResult:
    """Maximum-likelihood logistic regression by iteratively reweighted least squares."""
    y = matrix.y
    n = len(y)
    terms = [INTERCEPT] + list(matrix.columns)
    full = np.column_stack([np.ones(n), matrix.X]) if n else np.zeros((0, len(terms)))
    if n < len(terms):
        raise ValueError(f"need at least {len(terms)} rows, got {n}")
    keep = _independent_columns(full)
    aliased = [terms[j] for j in range(len(terms)) if j not in keep]
    X = full[:, keep]

    beta = np.zeros(X.shape[1])
    converged, separated, iterations = False, False, 0
    for iterations in range(1, max_iter + 1):
        eta = X @ beta
        mu = np.clip(_sigmoid(eta), 1e-15, 1 - 1e-15)
        w = mu * (1 - mu)
        z = eta + (y - mu) / w
        sw = np.sqrt(w)
        try:
            new, *_ = np.linalg.lstsq(X * sw[:, None], z * sw, rcond=None)
        except np.linalg.LinAlgError:
            separated = True
            break
        step = np.max(np.abs(new - beta)) if beta.size else 0.0
        beta = new
        if step < tol:
            converged = True
            break

    eta = X @ beta
    mu = _sigmoid(eta)
    w = np.clip(mu * (1 - mu), 1e-300, None)
    try:
        cov = np.linalg.inv(X.T @ (X * w[:, None]))
        se = np.sqrt(np.clip(np.diag(cov), 0, None))
    except np.linalg.LinAlgError:
        se = np.full(X.shape[1], np.nan)
        separated = True
    if not converged or (beta.size and np.max(np.abs(beta)) > 20) or np.any((mu < 1e-10) | (mu > 1 - 1e-10)):
        separated = True

    coefficients: dict[str, float | None] = {t: None for t in terms}
    std_errors: dict[str, float | None] = {t: None for t in terms}
    z_scores: dict[str, float | None] = {t: None for t in terms}
    p_values: dict[str, float | None] = {t: None for t in terms}
    for k, j in enumerate(keep):
        t = terms[j]
        coefficients[t] = float(beta[k])
        if se[k] > 0 and np.isfinite(se[k]):
            std_errors[t] = float(se[k])
            z_scores[t] = float(beta[k] / se[k])
            p_values[t] = math.erfc(abs(z_scores[t]) / math.sqrt(2))

    ybar = float(y.mean()) if n else 0.0
    null_dev = _bernoulli_deviance(y, np.full(n, ybar)) if 0 < ybar < 1 else 0.0
    resid_dev = _bernoulli_deviance(y, mu)
    return RegressionResult(
        terms=terms,
        coefficients=coefficients,
        std_errors=std_errors,
        z_scores=z_scores,
        p_values=p_values,
        null_deviance=null_dev,
        residual_deviance=resid_dev,
        aic=resid_dev + 2 * len(keep),
        fitted=mu,
        converged=converged,
        iterations=iterations,
        separated=separated,
        aliased=aliased,
        df_null=n - 1,
        df_residual=n - len(keep),
    )


@dataclass(frozen=True)
class RankingRow:
    smell: str
    models: int  # fits in which the term was estimated
    positive: int
    top5: int
    significant_positive: int  # coef > 0 and p < 0.01

    @property
    def pct_positive(self) -> float | None:
        return self.positive / self.models if self.models else None


def rank_smells(results: Sequence[tuple[str, RegressionResult]], smells: Sequence[str]) -> list[RankingRow]:
    """Per smell: how often its coefficient is positive, in the top five, and significantly positive."""
    rows = []
    tops: dict[str, set[str]] = {}
    for system, res in results:
        positives = [(res.coefficients[s], s) for s in smells
                     if res.coefficients.get(s) is not None and res.coefficients[s] > 0]
        positives.sort(key=lambda cs: (-cs[0], cs[1]))
        tops[system] = {s for _, s in positives[:5]}
    for s in smells:
        models = positive = top5 = sig = 0
        for system, res in results:
            coef = res.coefficients.get(s)
            if coef is None:
                continue
            models += 1
            if coef > 0:
                positive += 1
                p = res.p_values.get(s)
                if p is not None and p < 0.01:
                    sig += 1
            if s in tops[system]:
                top5 += 1
        rows.append(RankingRow(s, models, positive, top5, sig))
    order = {s: i for i, s in enumerate(smells)}
    rows.sort(key=lambda r: (r.pct_positive is None, -(r.pct_positive or 0), -r.top5,
                             -r.significant_positive, order[r.smell]))
    return rows
