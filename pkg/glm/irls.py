"""
Closed-form and Newton-method GLM fits on complete data
"""

import logging

import numpy as np
from scipy import special

from utils.errors import IrlsError, SeparationError, SingularMatrixError

logger = logging.getLogger(__name__)

# Coefficient norm beyond which the fit is treated as diverging
DIVERGENCE_NORM = 1e4


def _design(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"Design matrix must be 2-D, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("Design matrix has missing entries; impute first")
    return np.hstack((np.ones((X.shape[0], 1)), X))


def _solve(hessian: np.ndarray, score: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.solve(hessian, score)
    except np.linalg.LinAlgError as e:
        raise SingularMatrixError(f"Weighted Gram matrix is singular: {e}") from e


def irls_fit(
    X: np.ndarray, y: np.ndarray, max_iter: int = 100, tol: float = 1e-8
) -> tuple[np.ndarray, float]:
    """
    Logistic-regression MLE by iteratively re-weighted least squares.

    Converged when the largest coefficient change falls below tol.
    Returns (β, β0).
    """
    design = _design(X)
    y = np.asarray(y, dtype=np.float64)
    if not np.all((y == 0.0) | (y == 1.0)):
        raise ValueError("IRLS response must be binary")

    w = np.zeros(design.shape[1])
    for iteration in range(1, max_iter + 1):
        mu = special.expit(design @ w)
        weights = mu * (1.0 - mu)
        hessian = design.T @ (design * weights[:, None])
        score = design.T @ (y - mu)
        step = _solve(hessian, score)
        w = w + step
        if not np.all(np.isfinite(w)) or np.linalg.norm(w) > DIVERGENCE_NORM:
            raise SeparationError(
                f"Coefficients diverged after {iteration} iterations "
                f"(norm {np.linalg.norm(w):.3g}); classes are likely separable"
            )
        if np.max(np.abs(step)) < tol:
            logger.debug(f"IRLS converged in {iteration} iterations")
            return w[1:], float(w[0])

    fitted = special.expit(design @ w)
    if np.all(np.abs(y - fitted) < 1e-6):
        raise SeparationError("Fitted probabilities are all 0 or 1; classes are separable")
    raise IrlsError(f"IRLS did not converge in {max_iter} iterations")


def least_squares_fit(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    """Ordinary least squares with intercept; returns (β, β0)"""
    design = _design(X)
    y = np.asarray(y, dtype=np.float64)
    coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < design.shape[1]:
        raise SingularMatrixError(
            f"Design matrix is rank deficient (rank {rank} < {design.shape[1]})"
        )
    return coef[1:], float(coef[0])


def multinomial_fit(
    X: np.ndarray, y: np.ndarray, n_classes: int, max_iter: int = 100, tol: float = 1e-8
) -> tuple[np.ndarray, np.ndarray]:
    """
    Softmax-regression MLE by Newton's method with class 0 as reference.

    Returns β of shape (p, C) and β0 of shape (C,), reference column zero.
    """
    design = _design(X)
    labels = np.asarray(y, dtype=np.int64)
    n, d = design.shape
    free = n_classes - 1
    onehot = np.eye(n_classes)[labels]
    w = np.zeros((d, free))

    for iteration in range(1, max_iter + 1):
        eta = np.hstack((np.zeros((n, 1)), design @ w))
        probs = special.softmax(eta, axis=1)[:, 1:]
        score = (design.T @ (onehot[:, 1:] - probs)).reshape(-1, order="F")
        hessian = np.zeros((d * free, d * free))
        for a in range(free):
            for b in range(a, free):
                weight = probs[:, a] * ((a == b) - probs[:, b])
                block = design.T @ (design * weight[:, None])
                hessian[a * d : (a + 1) * d, b * d : (b + 1) * d] = block
                hessian[b * d : (b + 1) * d, a * d : (a + 1) * d] = block
        step = _solve(hessian, score).reshape((d, free), order="F")
        w = w + step
        if not np.all(np.isfinite(w)) or np.linalg.norm(w) > DIVERGENCE_NORM:
            raise SeparationError(f"Coefficients diverged after {iteration} iterations")
        if np.max(np.abs(step)) < tol:
            full = np.hstack((np.zeros((d, 1)), w))
            return full[1:], full[0]

    raise IrlsError(f"Multinomial Newton did not converge in {max_iter} iterations")
