"""Dense complex linear algebra with an explicit tolerance policy.

Everything else in the package sits on top of the handful of routines here:
Hermitian diagonalisation, numerical kernels, spectral functions of positive
matrices, tensor products and partial traces.  Rank decisions always use a
singular-value cutoff relative to the largest singular value, and operator
comparisons use the spectral norm.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DimensionMismatch, NotHermitian, NotPositive


@dataclass(frozen=True)
class Tolerance:
    """Cutoffs for rank decisions and operator equality.

    Attributes
    ----------
    rank_tol : float
        Singular values below ``rank_tol * sigma_max`` count as zero.
    eq_tol : float
        Two operators are equal when the norm of their difference is at most
        ``eq_tol``.
    """

    rank_tol: float = 1e-9
    eq_tol: float = 1e-9

    def __post_init__(self):
        if not (self.rank_tol > 0 and self.eq_tol > 0):
            raise ValueError("tolerances must be positive")

    @property
    def signal_tol(self) -> float:
        """Norms above this are treated as genuinely nonzero."""
        return 10 * self.eq_tol


_DEFAULT_TOL = Tolerance()


def default_tolerance() -> Tolerance:
    return _DEFAULT_TOL


def resolve_tol(tol: Tolerance | None) -> Tolerance:
    return _DEFAULT_TOL if tol is None else tol


@contextlib.contextmanager
def use_tolerance(tol: Tolerance) -> Iterator[Tolerance]:
    """Temporarily replace the package-wide default tolerance."""
    global _DEFAULT_TOL
    previous = _DEFAULT_TOL
    _DEFAULT_TOL = tol
    try:
        yield tol
    finally:
        _DEFAULT_TOL = previous


def as_matrix(M) -> np.ndarray:
    """Return ``M`` as a square complex128 array or raise DimensionMismatch."""
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise DimensionMismatch(f"expected a nonempty square matrix, got shape {M.shape}")
    return M


def opnorm(M) -> float:
    """Spectral norm (largest singular value)."""
    M = np.asarray(M)
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def dagger(M: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(M, -1, -2))


def hermitian_residual(M) -> float:
    M = np.asarray(M, dtype=complex)
    return opnorm(M - dagger(M))


def is_hermitian(M, tol: Tolerance | None = None) -> bool:
    return hermitian_residual(M) <= resolve_tol(tol).eq_tol


def is_unitary(U, tol: Tolerance | None = None) -> bool:
    U = as_matrix(U)
    return opnorm(dagger(U) @ U - np.eye(U.shape[0])) <= resolve_tol(tol).eq_tol


def hermitian_eig(M, tol: Tolerance | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Diagonalise a Hermitian matrix.

    Returns
    -------
    eigenvalues : ndarray
        Real eigenvalues in ascending order.
    eigenvectors : ndarray
        Unitary matrix whose columns are the matching eigenvectors.

    Raises
    ------
    NotHermitian
        If ``||M - M^dagger|| > eq_tol``.
    """
    tol = resolve_tol(tol)
    M = as_matrix(M)
    res = hermitian_residual(M)
    if res > tol.eq_tol:
        raise NotHermitian(f"matrix is not Hermitian (residual {res:.3e})")
    w, V = np.linalg.eigh((M + dagger(M)) / 2)
    return w, V


def _svd_kernel(stacked: np.ndarray, n: int, rank_tol: float, scale: float = 0.0) -> np.ndarray:
    if stacked.shape[0] == 0:
        return np.eye(n, dtype=stacked.dtype)
    full = stacked.shape[0] < n
    _, s, vh = np.linalg.svd(stacked, full_matrices=full)
    smax = max(s[0] if s.size else 0.0, scale)
    if smax == 0.0:
        return np.eye(n, dtype=stacked.dtype)
    rank = int(np.count_nonzero(s > rank_tol * smax))
    return np.conj(vh[rank:])


def nullspace(rows, tol: Tolerance | None = None) -> np.ndarray:
    """Orthonormal basis of the joint kernel of a set of row vectors.

    Parameters
    ----------
    rows : array_like, shape (m, n)
        Constraint rows; ``m`` may be zero if the shape is given as ``(0, n)``.

    Returns
    -------
    ndarray, shape (k, n)
        Orthonormal kernel vectors as rows (``k = 0`` for a trivial kernel).
    """
    tol = resolve_tol(tol)
    R = np.asarray(rows)
    if R.ndim != 2:
        raise DimensionMismatch("rows must form a 2-d array")
    R = R.astype(complex if np.iscomplexobj(R) else float)
    return _svd_kernel(R, R.shape[1], tol.rank_tol)


def kernel_of_blocks(blocks: Iterable[np.ndarray], n: int,
                     tol: Tolerance | None = None, *, real: bool = False,
                     scale: float = 0.0) -> np.ndarray:
    """Kernel of a tall matrix supplied as a stream of row blocks.

    The blocks are folded into an ``n x n`` triangular factor with the same
    Gram matrix, so memory stays at ``O(n^2)`` regardless of the row count.
    ``scale`` is a floor for the reference singular value, for callers whose
    rows have a known natural size and may all be numerically zero.
    """
    tol = resolve_tol(tol)
    dtype = float if real else complex
    R = np.zeros((0, n), dtype=dtype)
    for blk in blocks:
        blk = np.asarray(blk, dtype=dtype)
        if blk.shape[1] != n:
            raise DimensionMismatch("row blocks of unequal length")
        stacked = np.vstack([R, blk])
        if stacked.shape[0] > n:
            R = np.linalg.qr(stacked, mode="r")
        else:
            R = stacked
    return _svd_kernel(R, n, tol.rank_tol, scale)


_FUNCTIONS = ("log", "power", "exp")


def matrix_function_psd(M, f: str, param: complex | None = None,
                        tol: Tolerance | None = None) -> np.ndarray:
    """Apply a scalar function spectrally to a Hermitian matrix.

    ``f`` is one of ``"log"``, ``"power"`` (exponent ``param``, may be complex,
    e.g. ``1j * t`` for ``Delta**(it)``) or ``"exp"`` (computes
    ``exp(param * M)``, ``param`` defaulting to 1).

    Raises
    ------
    NotPositive
        For ``log`` or a power with negative real part when the smallest
        eigenvalue is not above ``rank_tol``; for any non-integer power of a
        matrix with a clearly negative eigenvalue.
    """
    tol = resolve_tol(tol)
    if f not in _FUNCTIONS:
        raise ValueError(f"unknown matrix function {f!r}")
    w, V = hermitian_eig(M, tol)
    if f == "exp":
        c = 1.0 if param is None else param
        fw = np.exp(c * w)
    elif f == "log":
        if w[0] <= tol.rank_tol:
            raise NotPositive(f"log of a matrix with eigenvalue {w[0]:.3e}")
        fw = np.log(w)
    else:
        if param is None:
            raise ValueError("power needs an exponent")
        p = complex(param)
        integral = p.imag == 0 and p.real == round(p.real)
        if (p.real < 0 or p.imag != 0) and w[0] <= tol.rank_tol:
            raise NotPositive(f"power {param} of a matrix with eigenvalue {w[0]:.3e}")
        if integral:
            fw = w.astype(complex) ** p.real
        else:
            if w[0] < -tol.rank_tol:
                raise NotPositive(f"fractional power of a matrix with eigenvalue {w[0]:.3e}")
            w = np.clip(w, 0.0, None)
            fw = np.zeros(w.shape, dtype=complex)
            pos = w > 0
            fw[pos] = w[pos].astype(complex) ** p
    out = (V * fw) @ dagger(V)
    if not np.any(np.imag(fw)):
        out = (out + dagger(out)) / 2
    return out


def kron(*mats) -> np.ndarray:
    """Kronecker product of any number of matrices (left factor most significant)."""
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, np.asarray(m, dtype=complex))
    return out


def partial_trace(M, site_dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every site not listed in ``keep``.

    Sites are ordered as in :func:`kron`; the kept sites retain their order.
    """
    M = as_matrix(M)
    dims = [int(d) for d in site_dims]
    if int(np.prod(dims)) != M.shape[0]:
        raise DimensionMismatch(f"site dims {dims} do not match matrix dimension {M.shape[0]}")
    keep = sorted(set(keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise DimensionMismatch(f"keep {keep} out of range for {len(dims)} sites")
    n = len(dims)
    T = M.reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    # trace from the highest index down so remaining axis numbers stay valid
    for count, i in enumerate(sorted(traced, reverse=True)):
        cur = n - count
        T = np.trace(T, axis1=i, axis2=i + cur)
    dk = int(np.prod([dims[k] for k in keep])) if keep else 1
    return T.reshape(dk, dk)
