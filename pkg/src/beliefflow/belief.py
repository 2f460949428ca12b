"""Gaussian beliefs over model weights.

A belief is a Gaussian distribution N(mu, Sigma) over the flattened weight
vector of a model. Three covariance families are supported:

* ``full``      - Sigma kept in eigenfactored form U diag(D) U^T,
* ``diagonal``  - Sigma = diag(variances),
* ``spherical`` - Sigma = variance * I.

The eigenfactored form is what the flow update needs anyway (whitening uses
D^{-1/2} U^T), so full beliefs never store a raw covariance matrix.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

FULL = "full"
DIAGONAL = "diagonal"
SPHERICAL = "spherical"
VARIANTS = (FULL, DIAGONAL, SPHERICAL)

# Default eigenvalue floor; keeps whitening well conditioned in float64.
LAMBDA_MIN = 1e-8

# Orthonormality drift beyond this triggers re-orthonormalization.
ORTHO_TOL = 1e-8

_LOG_2PI_E = math.log(2.0 * math.pi) + 1.0


@dataclasses.dataclass(frozen=True)
class BeliefState:
    """Immutable Gaussian belief. Use the factory functions to build one.

    Exactly one covariance payload is populated, matching ``variant``:
    (``eigenvectors``, ``eigenvalues``) for full, ``variances`` for diagonal,
    ``variance`` for spherical.
    """

    variant: str
    mean: np.ndarray
    eigenvectors: np.ndarray | None = None
    eigenvalues: np.ndarray | None = None
    variances: np.ndarray | None = None
    variance: float | None = None

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def full_belief(mean, eigenvectors, eigenvalues) -> BeliefState:
    """Belief with covariance U diag(D) U^T given by its eigenfactors."""
    mean = np.asarray(mean, dtype=float)
    u = np.asarray(eigenvectors, dtype=float)
    d = np.asarray(eigenvalues, dtype=float)
    n = mean.shape[0]
    if u.shape != (n, n) or d.shape != (n,):
        raise ValueError(f"eigenfactor shapes {u.shape}, {d.shape} do not match dim {n}")
    if not np.all(d > 0.0):
        raise ValueError("eigenvalues must be positive")
    return BeliefState(FULL, mean, eigenvectors=u, eigenvalues=d)


def full_belief_from_cov(mean, cov) -> BeliefState:
    """Eigendecompose a dense SPD covariance into a full belief."""
    cov = np.asarray(cov, dtype=float)
    evals, evecs = np.linalg.eigh(0.5 * (cov + cov.T))
    if not np.all(evals > 0.0):
        raise ValueError("covariance is not positive definite")
    return full_belief(mean, evecs, evals)


def diagonal_belief(mean, variances) -> BeliefState:
    mean = np.asarray(mean, dtype=float)
    v = np.asarray(variances, dtype=float)
    if v.shape != mean.shape:
        raise ValueError("variances and mean have different shapes")
    if not np.all(v > 0.0):
        raise ValueError("variances must be positive")
    return BeliefState(DIAGONAL, mean, variances=v)


def spherical_belief(mean, variance: float) -> BeliefState:
    mean = np.asarray(mean, dtype=float)
    if not variance > 0.0:
        raise ValueError("variance must be positive")
    return BeliefState(SPHERICAL, mean, variance=float(variance))


def validate(belief: BeliefState, lam_min: float | None = None) -> None:
    """Raise ValueError if the belief violates its structural invariants."""
    if belief.variant not in VARIANTS:
        raise ValueError(f"unknown variant {belief.variant!r}")
    if not np.all(np.isfinite(belief.mean)):
        raise ValueError("mean has non-finite entries")
    floor = 0.0 if lam_min is None else lam_min
    if belief.variant == FULL:
        u, d = belief.eigenvectors, belief.eigenvalues
        if u is None or d is None:
            raise ValueError("full belief is missing eigenfactors")
        drift = np.max(np.abs(u.T @ u - np.eye(belief.dim)))
        if drift > ORTHO_TOL:
            raise ValueError(f"eigenvector drift {drift:.3e} exceeds {ORTHO_TOL}")
        if np.any(d < floor) or not np.all(d > 0.0):
            raise ValueError("eigenvalues below floor")
    elif belief.variant == DIAGONAL:
        if belief.variances is None or np.any(belief.variances < floor) or not np.all(belief.variances > 0.0):
            raise ValueError("variances below floor")
    else:
        if belief.variance is None or belief.variance < floor or not belief.variance > 0.0:
            raise ValueError("variance below floor")


def covariance(belief: BeliefState) -> np.ndarray:
    """Densify the covariance. Intended for desk-scale dimensions only."""
    if belief.variant == FULL:
        return (belief.eigenvectors * belief.eigenvalues) @ belief.eigenvectors.T
    if belief.variant == DIAGONAL:
        return np.diag(belief.variances)
    return belief.variance * np.eye(belief.dim)


def sample(belief: BeliefState, rng: np.random.Generator) -> np.ndarray:
    """Draw one weight vector from the belief."""
    xi = rng.standard_normal(belief.dim)
    if belief.variant == FULL:
        return belief.mean + belief.eigenvectors @ (np.sqrt(belief.eigenvalues) * xi)
    if belief.variant == DIAGONAL:
        return belief.mean + np.sqrt(belief.variances) * xi
    return belief.mean + math.sqrt(belief.variance) * xi


def whiten(belief: BeliefState, vec: np.ndarray) -> np.ndarray:
    """Map a difference vector into whitened coordinates, D^{-1/2} U^T vec.

    The argument is a displacement (for example w - mu), not a point, so no
    mean shift is applied.
    """
    vec = np.asarray(vec, dtype=float)
    if belief.variant == FULL:
        return (belief.eigenvectors.T @ vec) / np.sqrt(belief.eigenvalues)
    if belief.variant == DIAGONAL:
        return vec / np.sqrt(belief.variances)
    return vec / math.sqrt(belief.variance)


def unwhiten(belief: BeliefState, vec: np.ndarray) -> np.ndarray:
    """Inverse of :func:`whiten`: U D^{1/2} vec."""
    vec = np.asarray(vec, dtype=float)
    if belief.variant == FULL:
        return belief.eigenvectors @ (np.sqrt(belief.eigenvalues) * vec)
    if belief.variant == DIAGONAL:
        return np.sqrt(belief.variances) * vec
    return math.sqrt(belief.variance) * vec


def kl_divergence(posterior: BeliefState, prior: BeliefState) -> float:
    """KL(posterior || prior) between two Gaussian beliefs.

    Equals 1/2 (mu'-mu)^T Sigma^{-1} (mu'-mu) + 1/2 tr(Sigma^{-1} Sigma')
    - 1/2 log det(Sigma^{-1} Sigma') - d/2.
    """
    if posterior.dim != prior.dim:
        raise ValueError("dimension mismatch")
    d = prior.dim
    dm = posterior.mean - prior.mean
    if posterior.variant == prior.variant == DIAGONAL:
        ratio = posterior.variances / prior.variances
        quad = float(np.sum(dm * dm / prior.variances))
        return 0.5 * (quad + float(np.sum(ratio - np.log(ratio))) - d)
    if posterior.variant == prior.variant == SPHERICAL:
        ratio = posterior.variance / prior.variance
        quad = float(dm @ dm) / prior.variance
        return 0.5 * (quad + d * (ratio - math.log(ratio)) - d)
    # General case through the eigenfactors of both sides.
    u0, d0 = _eigenfactors(prior)
    u1, d1 = _eigenfactors(posterior)
    white = (u0.T @ dm) / np.sqrt(d0)
    quad = float(white @ white)
    m = ((u0.T @ u1) * np.sqrt(d1)) / np.sqrt(d0)[:, None]
    trace = float(np.sum(m * m))
    logdet = float(np.sum(np.log(d1)) - np.sum(np.log(d0)))
    return 0.5 * (quad + trace - logdet - d)


def _eigenfactors(belief: BeliefState) -> tuple[np.ndarray, np.ndarray]:
    if belief.variant == FULL:
        return belief.eigenvectors, belief.eigenvalues
    if belief.variant == DIAGONAL:
        return np.eye(belief.dim), belief.variances
    return np.eye(belief.dim), np.full(belief.dim, belief.variance)


def entropy(belief: BeliefState) -> float:
    """Differential entropy, 1/2 log((2 pi e)^d det Sigma)."""
    d = belief.dim
    if belief.variant == FULL:
        logdet = float(np.sum(np.log(belief.eigenvalues)))
    elif belief.variant == DIAGONAL:
        logdet = float(np.sum(np.log(belief.variances)))
    else:
        logdet = d * math.log(belief.variance)
    return 0.5 * (d * _LOG_2PI_E + logdet)


def correct_spectrum(belief: BeliefState, lam_min: float = LAMBDA_MIN) -> BeliefState:
    """Numerical correction: floor the spectrum at lam_min and, for full
    beliefs, re-orthonormalize the eigenvector basis if it has drifted.

    Returns the input object unchanged when no correction is needed, so a
    clean belief passes through bit for bit.
    """
    if belief.variant == DIAGONAL:
        if np.all(belief.variances >= lam_min):
            return belief
        return BeliefState(DIAGONAL, belief.mean, variances=np.maximum(belief.variances, lam_min))
    if belief.variant == SPHERICAL:
        if belief.variance >= lam_min:
            return belief
        return BeliefState(SPHERICAL, belief.mean, variance=lam_min)
    u, d = belief.eigenvectors, belief.eigenvalues
    drift = np.max(np.abs(u.T @ u - np.eye(belief.dim)))
    needs_floor = bool(np.any(d < lam_min))
    if drift <= ORTHO_TOL and not needs_floor:
        return belief
    if drift > ORTHO_TOL:
        u = _modified_gram_schmidt(u)
    if needs_floor:
        d = np.maximum(d, lam_min)
    return BeliefState(FULL, belief.mean, eigenvectors=u, eigenvalues=d)


def _modified_gram_schmidt(u: np.ndarray) -> np.ndarray:
    q = np.array(u, dtype=float, copy=True)
    for j in range(q.shape[1]):
        for k in range(j):
            q[:, j] -= (q[:, k] @ q[:, j]) * q[:, k]
        norm = np.linalg.norm(q[:, j])
        if norm == 0.0:
            raise ValueError("degenerate eigenvector basis")
        q[:, j] /= norm
    return q
