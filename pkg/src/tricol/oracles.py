"""Independent slow-but-simple reference paths.

These share no code with the structured fills or the spectral pipeline; the
only library import is the matrix model (for entries and the decomposition).
Dense work goes through LAPACK: LU with partial pivoting for inversion,
Hessenberg reduction plus shifted QR for eigenvalues.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from .errors import NoConvergenceQR, SingularMatrix, ZeroScalarA
from .model import StructuredMatrix, decompose

#: dense paths are capped; correctness suites stay far below this
MAX_DENSE = 2048

#: relative pivot tolerance treated as singular
PIVOT_TOL = 1e-13


def dense_invert(M: np.ndarray) -> np.ndarray:
    """Inverse by LU with partial pivoting (getrf + getri)."""
    M = np.ascontiguousarray(M, dtype=float)
    n = M.shape[0]
    if n > MAX_DENSE:
        raise ValueError(f"dense path capped at {MAX_DENSE} (got {n})")
    lu, piv, info = lapack.dgetrf(M)
    if info > 0:
        raise SingularMatrix(f"zero pivot at position {info - 1}")
    if info < 0:
        raise ValueError(f"illegal argument {-info} to dgetrf")
    diag = np.abs(np.diag(lu))
    if diag.min() <= PIVOT_TOL * max(diag.max(), 1e-300):
        raise SingularMatrix(
            f"pivot ratio {diag.min() / diag.max():.3e} below tolerance")
    inv, info = lapack.dgetri(lu, piv)
    if info != 0:
        raise SingularMatrix(f"dgetri failed with info {info}")
    return inv


def dense_eigen(M: np.ndarray):
    """All eigenvalues via Hessenberg + shifted QR, with residual spot checks."""
    from .spectral import Spectrum  # type only; no fast-path computation

    M = np.ascontiguousarray(M, dtype=float)
    n = M.shape[0]
    if n > MAX_DENSE:
        raise ValueError(f"dense path capped at {MAX_DENSE} (got {n})")
    try:
        vals, vecs = scipy.linalg.eig(M)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - rare
        raise NoConvergenceQR(str(exc)) from exc
    scale = max(1.0, float(np.max(np.abs(M))))
    for k in range(0, n, max(1, n // 4)):
        r = float(np.max(np.abs(M @ vecs[:, k] - vals[k] * vecs[:, k])))
        if r > 1e-8 * scale * n:
            raise NoConvergenceQR(f"residual {r} at eigenpair {k}")
    order = np.lexsort((vals.imag, vals.real))
    return Spectrum(values=vals[order].copy())


def sherman_morrison_invert(m: StructuredMatrix) -> np.ndarray:
    """B^-1 from the tridiagonal part and a rank-one correction.

    Under the decomposition B = u*delta - W this reads
    B^-1 = -(W^-1 + W^-1 u a^-1 delta W^-1) with a = 1 - delta W^-1 u;
    the multiplications are arranged as vector-times-matrix so the cost
    beyond inverting W is O(n^2).
    """
    W, u, delta = decompose(m)
    Winv = dense_invert(W)
    x = Winv @ u
    a = 1.0 - float(x[0])  # delta W^-1 u
    if abs(a) <= 1e-14 * (1.0 + float(np.max(np.abs(x)))):
        raise ZeroScalarA(f"a = {a}")
    row = Winv[0, :]
    return -(Winv + np.outer(x / a, row))
