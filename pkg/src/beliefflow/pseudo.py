"""Pseudo datapoints: the virtual observations a belief update implies.

Any move from N(mu, Sigma) to N(mu', Sigma') can be read as an exact
Bayesian update on one Gaussian observation with location x and effective
covariance R:

    x = (Sigma'^{-1} - Sigma^{-1})^{-1} (Sigma'^{-1} mu' - Sigma^{-1} mu)
    R = (Sigma'^{-1} - Sigma^{-1})^{-1}

A negative eigenvalue of R means the update increased variance along that
direction, that is, it forgot rather than learned. For spherical beliefs R
has a single eigenvalue lambda; its inverse rho = 1/lambda is the precision
the round contributed, and the running sum of rho measures accumulated
evidence.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .belief import DIAGONAL, FULL, SPHERICAL, BeliefState, covariance

# Relative Frobenius difference below which two covariances count as equal.
NO_DATAPOINT_TOL = 1e-12


@dataclasses.dataclass(frozen=True)
class PseudoDatapoint:
    """Location and effective covariance of the implied observation.

    cov is shaped to the variant: (d, d) for full, per-coordinate vector for
    diagonal, scalar for spherical. Diagonal coordinates the update never
    touched carry infinite covariance (a zero-precision observation), which
    keeps the conjugate round trip exact on sparse updates.
    """

    variant: str
    x: np.ndarray
    cov: np.ndarray | float


def extract_pseudo(prior: BeliefState, posterior: BeliefState) -> PseudoDatapoint | None:
    """Invert one belief update into its pseudo datapoint.

    Returns None when the posterior equals the prior within tolerance (an
    identity update implies no observation at all). Raises ValueError when
    the precision difference is singular but the covariances differ, which
    happens for updates that only move a proper subspace.
    """
    if prior.variant != posterior.variant:
        raise ValueError("prior and posterior must share a variant")
    if prior.dim != posterior.dim:
        raise ValueError("dimension mismatch")
    if prior.variant == SPHERICAL:
        if abs(posterior.variance - prior.variance) <= NO_DATAPOINT_TOL * prior.variance:
            return None
        dprec = 1.0 / posterior.variance - 1.0 / prior.variance
        r = 1.0 / dprec
        x = r * (posterior.mean / posterior.variance - prior.mean / prior.variance)
        return PseudoDatapoint(SPHERICAL, x, r)
    if prior.variant == DIAGONAL:
        v0, v1 = prior.variances, posterior.variances
        if np.linalg.norm(v1 - v0) <= NO_DATAPOINT_TOL * np.linalg.norm(v0):
            return None
        dprec = 1.0 / v1 - 1.0 / v0
        untouched = dprec == 0.0
        safe_dprec = np.where(untouched, 1.0, dprec)
        r = np.where(untouched, np.inf, 1.0 / safe_dprec)
        x = np.where(untouched, posterior.mean,
                     (posterior.mean / v1 - prior.mean / v0) / safe_dprec)
        return PseudoDatapoint(DIAGONAL, x, r)
    cov0, cov1 = covariance(prior), covariance(posterior)
    denom = np.linalg.norm(cov0, "fro")
    if np.linalg.norm(cov1 - cov0, "fro") <= NO_DATAPOINT_TOL * denom:
        return None
    prec0 = _full_precision(prior)
    prec1 = _full_precision(posterior)
    dprec = 0.5 * ((prec1 - prec0) + (prec1 - prec0).T)
    # np.linalg.inv happily "inverts" a numerically singular difference, so
    # check the spectrum explicitly: a linear flow moves only a low-rank
    # precision subspace and has no whole-space pseudo datapoint.
    evals = np.linalg.eigvalsh(dprec)
    if np.min(np.abs(evals)) <= 1e-10 * np.max(np.abs(evals)):
        raise ValueError("precision difference is singular; the update moved a proper "
                         "subspace only (use pseudo_trace for its informative eigenvalues)")
    r = np.linalg.inv(dprec)
    r = 0.5 * (r + r.T)
    x = r @ (prec1 @ posterior.mean - prec0 @ prior.mean)
    return PseudoDatapoint(FULL, x, r)


def _full_precision(belief: BeliefState) -> np.ndarray:
    u, d = belief.eigenvectors, belief.eigenvalues
    return (u / d) @ u.T


def bayes_update_gaussian(prior: BeliefState, x, cov) -> BeliefState:
    """Conjugate Gaussian update of the prior on one observation N(x; w, cov).

    Posterior precision is Sigma^{-1} + R^{-1} and the posterior mean is the
    precision-weighted combination. cov may be indefinite (a forgetting
    observation) as long as the resulting precision stays positive definite;
    otherwise the pair is inconsistent and a ValueError is raised.
    """
    x = np.asarray(x, dtype=float)
    if prior.variant == SPHERICAL:
        prec = 1.0 / prior.variance + 1.0 / cov
        if not prec > 0.0:
            raise ValueError("inconsistent pseudo datapoint: posterior precision not positive")
        var = 1.0 / prec
        mean = var * (prior.mean / prior.variance + x / cov)
        # Spherical stays spherical only because cov is scalar here.
        return BeliefState(SPHERICAL, mean, variance=var)
    if prior.variant == DIAGONAL:
        cov = np.asarray(cov, dtype=float)
        with np.errstate(divide="ignore"):
            obs_prec = np.where(np.isinf(cov), 0.0, 1.0 / cov)
        prec = 1.0 / prior.variances + obs_prec
        if np.any(prec <= 0.0):
            raise ValueError("inconsistent pseudo datapoint: posterior precision not positive")
        var = 1.0 / prec
        mean = var * (prior.mean / prior.variances + np.where(obs_prec == 0.0, 0.0, x * obs_prec))
        return BeliefState(DIAGONAL, mean, variances=var)
    cov = np.asarray(cov, dtype=float)
    prec0 = _full_precision(prior)
    obs_prec = np.linalg.inv(cov)
    post_prec = prec0 + 0.5 * (obs_prec + obs_prec.T)
    post_prec = 0.5 * (post_prec + post_prec.T)
    evals, evecs = np.linalg.eigh(post_prec)
    if np.any(evals <= 0.0):
        raise ValueError("inconsistent pseudo datapoint: posterior precision not positive")
    rhs = prec0 @ prior.mean + obs_prec @ x
    mean = evecs @ ((evecs.T @ rhs) / evals)
    return BeliefState(FULL, mean, eigenvectors=evecs, eigenvalues=1.0 / evals)


@dataclasses.dataclass(frozen=True)
class TraceRow:
    """One snapshot-to-snapshot pseudo extraction, ready for CSV."""

    round: int
    x: np.ndarray | None
    eigenvalues: np.ndarray | None
    rho: float | None
    cum_rho: float | None
    degenerate: bool


def pseudo_trace(snapshots) -> list[TraceRow]:
    """Pseudo datapoints between consecutive belief snapshots of one run.

    snapshots is a sequence of (round, BeliefState) pairs in round order.
    Spherical runs also report rho = 1/lambda per row and its running sum;
    identity intervals become degenerate marker rows and do not contribute
    to the sum. Full-covariance rows report the informative-subspace
    eigenvalues of R only (the location has no stable basis to live in).
    """
    rows: list[TraceRow] = []
    cum_rho = 0.0
    for (_, prev), (rnd, cur) in zip(snapshots, snapshots[1:]):
        if prev.variant != cur.variant:
            raise ValueError("snapshots mix belief variants")
        spherical = cur.variant == SPHERICAL
        if cur.variant == FULL:
            rows.append(_full_trace_row(rnd, prev, cur))
            continue
        pd = extract_pseudo(prev, cur)
        if pd is None:
            rows.append(TraceRow(rnd, None, None, None,
                                 cum_rho if spherical else None, True))
            continue
        if spherical:
            lam = float(pd.cov)
            rho = 1.0 / lam
            cum_rho += rho
            rows.append(TraceRow(rnd, pd.x, np.array([lam]), rho, cum_rho, False))
        else:
            finite = np.isfinite(pd.cov)
            rows.append(TraceRow(rnd, pd.x[finite], pd.cov[finite], None, None, False))
    return rows


def _full_trace_row(rnd: int, prev: BeliefState, cur: BeliefState) -> TraceRow:
    """Informative-subspace eigenvalues of R for one full-covariance interval.

    One flow update changes the precision on a low-rank subspace, so the
    whole-matrix inverse the exact extraction needs rarely exists; the
    spectrum of the precision difference above numerical noise is what is
    reportable.
    """
    dprec = _full_precision(cur) - _full_precision(prev)
    dprec = 0.5 * (dprec + dprec.T)
    evals = np.linalg.eigvalsh(dprec)
    scale = float(np.max(np.abs(evals)))
    if scale == 0.0:
        return TraceRow(rnd, None, None, None, None, True)
    informative = np.abs(evals) > 1e-10 * scale
    if not informative.any():
        return TraceRow(rnd, None, None, None, None, True)
    return TraceRow(rnd, None, 1.0 / evals[informative], None, None, False)
