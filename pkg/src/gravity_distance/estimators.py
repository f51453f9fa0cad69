"""OLS and Poisson pseudo-maximum-likelihood fits with Student-t inference.

OLS goes through a column-pivoted QR factorisation; PPML solves the Poisson
score equations by iteratively reweighted least squares with step-halving
and reports a sandwich covariance by default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.linalg
from scipy import stats

from .design import INTERCEPT, DesignMatrix, constant_columns


class EstimationError(RuntimeError):
    """A fit could not be carried out on the given design."""


class RankDeficiencyError(EstimationError):
    def __init__(self, message: str, columns: tuple[str, ...]):
        self.columns = columns
        super().__init__(message)


class ConvergenceError(EstimationError):
    def __init__(self, message: str, trace: list[float]):
        self.trace = trace
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class FitResult:
    labels: tuple[str, ...]
    params: np.ndarray
    covariance: np.ndarray
    n: int
    k: int
    estimator: str
    residuals: np.ndarray
    fitted: np.ndarray
    sigma2: float = math.nan
    dropped_zero_count: int = 0
    converged: bool = True
    iterations: int = 0
    deviance: float = math.nan
    deviance_trace: tuple[float, ...] = ()
    covariance_kind: str = "classical"
    extra: dict = field(default_factory=dict, repr=False)

    @property
    def df(self) -> int:
        return self.n - self.k

    @property
    def coefficients(self) -> dict[str, float]:
        return dict(zip(self.labels, self.params.tolist()))

    def coef(self, label: str) -> float:
        return float(self.params[self.labels.index(label)])

    def se(self, label: str) -> float:
        i = self.labels.index(label)
        return float(math.sqrt(max(self.covariance[i, i], 0.0)))


def _check_design(d: DesignMatrix):
    if d.n < d.k:
        raise EstimationError(f"n={d.n} observations cannot identify k={d.k} coefficients")
    const = constant_columns(d)
    if const:
        raise RankDeficiencyError(f"zero-variance columns: {', '.join(const)}", tuple(const))


def _pivoted_qr(X: np.ndarray, labels):
    """QR of the unit-norm-scaled design with column pivoting.

    Returns ``(Q, R, perm, scale)`` or raises with a minimal collinear set.
    """
    scale = np.linalg.norm(X, axis=0)
    scale[scale == 0] = 1.0
    Xs = X / scale
    Q, R, perm = scipy.linalg.qr(Xs, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = max(X.shape) * np.finfo(float).eps * diag[0] * 10
    rank = int(np.sum(diag > tol))
    if rank < X.shape[1]:
        dep = perm[rank]
        basis = perm[:rank]
        # unique representation of the dependent column in the pivoted basis
        coef = scipy.linalg.solve_triangular(R[:rank, :rank], R[:rank, rank])
        support = [basis[i] for i in np.flatnonzero(np.abs(coef) > 1e-8 * np.abs(coef).max())]
        cols = tuple(labels[c] for c in sorted([*support, dep]))
        raise RankDeficiencyError(f"design is rank deficient; collinear columns: {', '.join(cols)}", cols)
    return Q, R, perm, scale


def _inverse_gram(R: np.ndarray, perm: np.ndarray, scale: np.ndarray) -> np.ndarray:
    """(X'X)^{-1} in original column order from the pivoted, scaled R."""
    Rinv = scipy.linalg.solve_triangular(R, np.eye(R.shape[0]))
    inner = Rinv @ Rinv.T
    out = np.empty_like(inner)
    out[np.ix_(perm, perm)] = inner
    out /= np.outer(scale, scale)
    return (out + out.T) / 2.0


def _ls_solve(Q, R, perm, scale, y):
    z = scipy.linalg.solve_triangular(R, Q.T @ y)
    beta = np.empty_like(z)
    beta[perm] = z
    return beta / scale


def ols_fit(d: DesignMatrix) -> FitResult:
    """Least squares by pivoted QR; classical covariance ``sigma2 (X'X)^{-1}``."""
    _check_design(d)
    X, y = d.rows, d.response
    Q, R, perm, scale = _pivoted_qr(X, d.column_labels)
    beta = _ls_solve(Q, R, perm, scale, y)
    fitted = X @ beta
    resid = y - fitted
    df = d.n - d.k
    sigma2 = float(resid @ resid / df) if df > 0 else math.nan
    cov = sigma2 * _inverse_gram(R, perm, scale) if df > 0 else np.full((d.k, d.k), np.nan)
    return FitResult(
        labels=d.column_labels,
        params=beta,
        covariance=cov,
        n=d.n,
        k=d.k,
        estimator="ols",
        residuals=resid,
        fitted=fitted,
        sigma2=sigma2,
        dropped_zero_count=d.dropped_zero_count,
    )


def poisson_deviance(y: np.ndarray, mu: np.ndarray) -> float:
    pos = y > 0
    term = np.zeros_like(y)
    term[pos] = y[pos] * np.log(y[pos] / mu[pos])
    return float(2.0 * np.sum(term - (y - mu)))


def ppml_fit(
    d: DesignMatrix,
    tol: float = 1e-10,
    max_iter: int = 100,
    max_halvings: int = 20,
    covariance: str = "sandwich",
) -> FitResult:
    """Poisson pseudo-maximum-likelihood via IRLS with step-halving.

    Starts from zero slopes and ``_cons = log(mean(y))``.  Iterates until
    the relative deviance change drops below ``tol``.  ``covariance`` is
    ``"sandwich"`` (default) or ``"classical"`` (inverse Fisher information,
    valid only if the data really are Poisson).
    """
    _check_design(d)
    X, y = d.rows, d.response
    if np.any(y < 0):
        raise EstimationError("PPML needs a non-negative level response")
    if not np.any(y > 0):
        raise EstimationError("PPML response is identically zero")
    if covariance not in ("sandwich", "classical"):
        raise ValueError(f"unknown covariance kind {covariance!r}")
    _pivoted_qr(X, d.column_labels)  # rank check on the unweighted design

    beta = np.zeros(d.k)
    if INTERCEPT in d.column_labels:
        beta[d.column_labels.index(INTERCEPT)] = math.log(y.mean())
    eta = X @ beta
    mu = np.exp(eta)
    dev = poisson_deviance(y, mu)
    trace = [dev]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        # working response for the log link; weights = mu
        w = mu
        z = eta + (y - mu) / mu
        sw = np.sqrt(w)
        Xw = X * sw[:, None]
        if not np.all(np.isfinite(Xw)) or w.max() <= 0:
            raise EstimationError("IRLS weights are not finite")
        wmin = w.min() / w.max()
        try:
            Q, R, perm, scale = _pivoted_qr(Xw, d.column_labels)
        except RankDeficiencyError as exc:
            raise EstimationError(
                f"IRLS weights collapsed (separation); offending columns: {', '.join(exc.columns)}"
            ) from None
        proposal = _ls_solve(Q, R, perm, scale, z * sw)
        step = proposal - beta
        first_dev = None
        for _ in range(max_halvings + 1):
            cand = beta + step
            eta_c = X @ cand
            if np.all(np.isfinite(eta_c)) and eta_c.max() < 700:
                mu_c = np.exp(eta_c)
                dev_c = poisson_deviance(y, mu_c)
                if dev_c <= dev:
                    break
                if first_dev is None:
                    first_dev = dev_c
            step = step / 2.0
        else:
            if first_dev is not None and abs(first_dev - dev) / (abs(dev) + 0.1) < tol:
                # already at the optimum; the full step only moved by rounding
                converged = True
                break
            if wmin < 1e-300:
                raise EstimationError("IRLS weights collapsed (separation)")
            raise ConvergenceError("step-halving failed to reduce the deviance", trace)
        beta, eta, mu = cand, eta_c, mu_c
        change = abs(dev - dev_c) / (abs(dev_c) + 0.1)
        dev = dev_c
        trace.append(dev)
        if change < tol:
            converged = True
            break
    if not converged:
        raise ConvergenceError(
            f"IRLS did not converge in {max_iter} iterations; deviance trace tail "
            f"{[round(t, 6) for t in trace[-5:]]}",
            trace,
        )

    _check_separation(X, y, mu, d.column_labels)
    resid = y - mu
    bread = _poisson_bread(X, mu, d.column_labels)
    if covariance == "sandwich":
        cov = _sandwich(bread, X, resid)
    else:
        cov = bread
    return FitResult(
        labels=d.column_labels,
        params=beta,
        covariance=cov,
        n=d.n,
        k=d.k,
        estimator="ppml",
        residuals=resid,
        fitted=mu,
        dropped_zero_count=d.dropped_zero_count,
        converged=True,
        iterations=it,
        deviance=dev,
        deviance_trace=tuple(trace),
        covariance_kind=covariance,
    )


def _check_separation(X, y, mu, labels):
    """Raise if zero flows were fitted by sending a coefficient to infinity.

    Zero-flow rows whose fitted value has collapsed are set aside; if the
    remaining rows no longer identify every coefficient, the columns that
    lose identification are reported.
    """
    collapsed = (y == 0) & (mu < np.sqrt(np.finfo(float).eps) * mu.max())
    if not collapsed.any():
        return
    rest = X[~collapsed]
    offending = [lab for lab, col in zip(labels, rest.T) if lab != INTERCEPT and np.ptp(col) == 0]
    if not offending:
        try:
            _pivoted_qr(rest, labels)
            return
        except RankDeficiencyError as exc:
            offending = list(exc.columns)
    raise EstimationError(
        f"separation: IRLS weights collapsed for {int(collapsed.sum())} zero-flow observations; "
        f"offending columns: {', '.join(offending)}"
    )


def _poisson_bread(X, mu, labels):
    sw = np.sqrt(mu)
    _, R, perm, scale = _pivoted_qr(X * sw[:, None], labels)
    return _inverse_gram(R, perm, scale)


def _sandwich(bread, X, resid):
    meat = (X * (resid**2)[:, None]).T @ X
    cov = bread @ meat @ bread
    return (cov + cov.T) / 2.0


def score_residual(f: FitResult, d: DesignMatrix) -> np.ndarray:
    """Poisson score ``X'(y - mu)`` at the reported optimum."""
    return d.rows.T @ (d.response - f.fitted)


def robust_covariance(f: FitResult, d: DesignMatrix, kind: str = "HC1") -> np.ndarray:
    """Heteroskedasticity-robust covariance of a fit.

    ``HC1`` scales the White estimator by ``n / (n - k)`` (OLS).  ``sandwich``
    is ``A^{-1} B A^{-1}`` with the Poisson information ``A = X' diag(mu) X``
    for PPML fits and ``A = X'X`` for OLS fits, without small-sample scaling.
    """
    if d.n - d.k <= 0:
        raise EstimationError(f"no residual degrees of freedom (n={d.n}, k={d.k})")
    X, e = d.rows, f.residuals
    if kind == "HC1":
        Q, R, perm, scale = _pivoted_qr(X, d.column_labels)
        cov = _sandwich(_inverse_gram(R, perm, scale), X, e)
        return cov * d.n / (d.n - d.k)
    if kind == "sandwich":
        if f.estimator == "ppml":
            bread = _poisson_bread(X, f.fitted, d.column_labels)
        else:
            _, R, perm, scale = _pivoted_qr(X, d.column_labels)
            bread = _inverse_gram(R, perm, scale)
        return _sandwich(bread, X, e)
    raise ValueError(f"unknown robust covariance kind {kind!r}")


def fit(d: DesignMatrix, estimator: str, **kw) -> FitResult:
    if estimator == "ols":
        return ols_fit(d)
    if estimator == "ppml":
        return ppml_fit(d, **kw)
    raise ValueError(f"unknown estimator {estimator!r}")


# -- inference ---------------------------------------------------------------


class InferenceRow(NamedTuple):
    label: str
    coef: float
    std_err: float
    t: float
    p: float
    ci_low: float
    ci_high: float
    degenerate: bool = False


@dataclass(frozen=True)
class InferenceTable:
    rows: tuple[InferenceRow, ...]
    level: float
    df: int
    response_label: str = ""

    def __getitem__(self, label: str) -> InferenceRow:
        for r in self.rows:
            if r.label == label:
                return r
        raise KeyError(label)

    def render(self) -> str:
        return render_table(self)


def t_critical(df: int, level: float = 0.95) -> float:
    return float(stats.t.ppf(0.5 + level / 2.0, df))


def inference_row(label: str, coef: float, std_err: float, df: int, level: float = 0.95) -> InferenceRow:
    """Student-t statistics for one coefficient.

    A zero standard error with a nonzero coefficient gives ``t = ±inf`` and
    ``p = 0`` with ``degenerate=True``.
    """
    tc = t_critical(df, level)
    if std_err == 0:
        t = math.copysign(math.inf, coef) if coef != 0 else math.nan
        p = 0.0 if coef != 0 else math.nan
        return InferenceRow(label, coef, 0.0, t, p, coef, coef, True)
    t = coef / std_err
    p = float(2.0 * stats.t.sf(abs(t), df))
    return InferenceRow(label, coef, std_err, t, p, coef - tc * std_err, coef + tc * std_err)


def inference(f: FitResult, level: float = 0.95, response_label: str = "") -> InferenceTable:
    if not 0 < level < 1:
        raise ValueError(f"confidence level must lie in (0, 1), got {level}")
    if f.df < 1:
        raise EstimationError(f"inference needs df >= 1, got {f.df}")
    rows = []
    for i, label in enumerate(f.labels):
        se = math.sqrt(max(float(f.covariance[i, i]), 0.0))
        rows.append(inference_row(label, float(f.params[i]), se, f.df, level))
    # table convention: intercept last
    rows.sort(key=lambda r: r.label == INTERCEPT)
    return InferenceTable(tuple(rows), level, f.df, response_label)


def _sig7(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "."
    return f"{x:.7g}"


def _fixed(x: float, places: int) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "."
    s = f"{x:.{places}f}"
    return "0." + "0" * places if s == "-0." + "0" * places else s


def render_table(table: InferenceTable) -> str:
    """Regression table in the familiar ``Coef. | Std. Err. | t | P>|t|`` layout.

    Coefficients, standard errors and interval bounds carry 7 significant
    digits, t two decimals and p three.
    """
    pct = f"{table.level * 100:g}%"
    lines = [
        f"| {table.response_label} | Coef. | Std. Err. | t | P>|t| | [{pct} Conf. Interval] |",
        "|---|---:|---:|---:|---:|---:|",
    ]
    for r in table.rows:
        lines.append(
            f"| {r.label} | {_sig7(r.coef)} | {_sig7(r.std_err)} | {_fixed(r.t, 2)} | "
            f"{_fixed(r.p, 3)} | {_sig7(r.ci_low)} {_sig7(r.ci_high)} |"
        )
    return "\n".join(lines) + "\n"
