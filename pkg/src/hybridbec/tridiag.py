"""Thomas algorithm (Gaussian elimination + back substitution) for complex
tridiagonal systems.

    diag[0] x[0] + upper[0] x[1]                          = rhs[0]
    lower[i-1] x[i-1] + diag[i] x[i] + upper[i] x[i+1]    = rhs[i]
    lower[n-2] x[n-2] + diag[n-1] x[n-1]                  = rhs[n-1]

No pivoting: the Crank-Nicolson matrices built here are diagonally dominant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

PIVOT_FLOOR = 1e-300


class SingularSystemError(ArithmeticError):
    def __init__(self, row: int):
        super().__init__(f"zero pivot at row {row} during tridiagonal elimination")
        self.row = row


@numba.njit(cache=True)
def thomas(lower, diag, upper, rhs, out, cp):
    """Solve in place into ``out`` using ``cp`` (length n) as scratch.

    Returns -1 on success, otherwise the row of the vanishing pivot.
    ``out`` may alias ``rhs``.
    """
    n = diag.shape[0]
    piv = diag[0]
    if max(abs(piv.real), abs(piv.imag)) < PIVOT_FLOOR:
        return 0
    inv = piv.conjugate() / (piv.real * piv.real + piv.imag * piv.imag)
    cp[0] = upper[0] * inv if n > 1 else 0.0
    out[0] = rhs[0] * inv
    for i in range(1, n):
        piv = diag[i] - lower[i - 1] * cp[i - 1]
        if max(abs(piv.real), abs(piv.imag)) < PIVOT_FLOOR:
            return i
        inv = piv.conjugate() / (piv.real * piv.real + piv.imag * piv.imag)
        if i < n - 1:
            cp[i] = upper[i] * inv
        out[i] = (rhs[i] - lower[i - 1] * out[i - 1]) * inv
    for i in range(n - 2, -1, -1):
        out[i] -= cp[i] * out[i + 1]
    return -1


@dataclass(frozen=True)
class TridiagonalSystem:
    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        n = len(self.diag)
        if n < 1:
            raise ValueError("empty system")
        if len(self.lower) != n - 1 or len(self.upper) != n - 1 or len(self.rhs) != n:
            raise ValueError(
                f"inconsistent lengths: lower {len(self.lower)}, diag {n}, "
                f"upper {len(self.upper)}, rhs {len(self.rhs)}"
            )

    @property
    def n(self) -> int:
        return len(self.diag)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.diag * v
        out[:-1] += self.upper * v[1:]
        out[1:] += self.lower * v[:-1]
        return out


def solve(sys: TridiagonalSystem, scratch: np.ndarray | None = None) -> np.ndarray:
    """Solve ``sys``; the input arrays are never modified."""
    n = sys.n
    lower = np.ascontiguousarray(sys.lower, dtype=np.complex128)
    diag = np.ascontiguousarray(sys.diag, dtype=np.complex128)
    upper = np.ascontiguousarray(sys.upper, dtype=np.complex128)
    rhs = np.ascontiguousarray(sys.rhs, dtype=np.complex128)
    if n == 1:
        # numba needs non-empty off-diagonals to type the call
        lower = upper = np.zeros(1, dtype=np.complex128)
    if scratch is None or scratch.shape[0] < n or scratch.dtype != np.complex128:
        scratch = np.empty(n, dtype=np.complex128)
    out = np.empty(n, dtype=np.complex128)
    row = thomas(lower, diag, upper, rhs, out, scratch)
    if row >= 0:
        raise SingularSystemError(int(row))
    return out
