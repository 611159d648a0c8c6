"""Lyapunov residual norms.

The ADI iterations keep the residual in the factored form W R W^H, whose
spectral and Frobenius norms follow from the eigenvalues of the m x m
matrix W^H W R. The explicit residual of an iterate L D L^H is evaluated
through a thin QR of [A L, E L, B], never forming an n x n matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING

import numpy as np
import scipy.linalg as spla

from tadi.errors import InputError

if TYPE_CHECKING:
    from tadi.problem import LyapunovProblem


class NormKind(str, Enum):
    """Matrix norm used for residuals and stopping tests."""

    SPECTRAL = "spectral"
    FROBENIUS = "frobenius"


def _norm_from_eigenvalues(eigenvalues: np.ndarray, kind: NormKind) -> float:
    if eigenvalues.size == 0:
        return 0.0
    magnitudes = np.abs(eigenvalues)
    if NormKind(kind) is NormKind.SPECTRAL:
        return float(magnitudes.max())
    return float(np.sqrt(np.sum(magnitudes**2)))


def residual_norm(W: np.ndarray, R: np.ndarray, kind: NormKind = NormKind.SPECTRAL) -> float:
    """Norm of W R W^H from the eigenvalues of W^H W R.

    Raises:
        InputError: If W and R do not fit together
    """
    W = np.asarray(W)
    if W.ndim == 1:
        W = W[:, np.newaxis]
    if R.shape != (W.shape[1], W.shape[1]):
        raise InputError(f"R of shape {R.shape} does not match W with {W.shape[1]} columns")
    gram = W.conj().T @ W
    return _norm_from_eigenvalues(spla.eigvals(gram @ R), kind)


@dataclass
class ResidualFactor:
    """Residual W R W^H with norms cached per kind."""

    W: np.ndarray
    R: np.ndarray
    _norms: dict[NormKind, float] = field(default_factory=dict, repr=False)

    def norm(self, kind: NormKind = NormKind.SPECTRAL) -> float:
        kind = NormKind(kind)
        if kind not in self._norms:
            self._norms[kind] = residual_norm(self.W, self.R, kind)
        return self._norms[kind]


def explicit_residual_norm(
    problem: LyapunovProblem,
    L: np.ndarray,
    D: np.ndarray,
    kind: NormKind = NormKind.SPECTRAL,
) -> float:
    """Norm of A X E^H + E X A^H + B R B^H for X = L D L^H.

    The residual equals Z M Z^H with Z = [A L, E L, B] and
    M = [[0, D, 0], [D, 0, 0], [0, 0, R]]; after Z = Q T the norm is read off
    the (2k + m)-dimensional Hermitian matrix T M T^H.
    """
    k = L.shape[1] if L.ndim == 2 else 0
    if k == 0:
        return residual_norm(problem.B, problem.R, kind)
    if D.shape != (k, k):
        raise InputError(f"D of shape {D.shape} does not match L with {k} columns")

    Z = np.hstack([problem.A @ L, problem.E @ L, problem.B])
    _, T = spla.qr(Z, mode="economic")

    m = problem.m
    dtype = np.result_type(D.dtype, problem.R.dtype, np.float64)
    middle = np.zeros((2 * k + m, 2 * k + m), dtype=dtype)
    middle[:k, k : 2 * k] = D
    middle[k : 2 * k, :k] = D
    middle[2 * k :, 2 * k :] = problem.R

    core = T @ middle @ T.conj().T
    core = (core + core.conj().T) / 2
    return _norm_from_eigenvalues(spla.eigvalsh(core), kind)


def dense_residual_norm(problem: LyapunovProblem, X: np.ndarray, kind: NormKind = NormKind.SPECTRAL) -> float:
    """Norm of the residual of a dense X (oracle and tests)."""
    A = problem.A.to_dense()
    E = problem.E.to_dense()
    residual = A @ X @ E.conj().T + E @ X @ A.conj().T + problem.constant_term()
    if NormKind(kind) is NormKind.SPECTRAL:
        return float(np.linalg.norm(residual, 2))
    return float(np.linalg.norm(residual, "fro"))
