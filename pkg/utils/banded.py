"""Banded and cyclic linear solves for the implicit schemes"""
import warnings
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.linalg import LinAlgError, solve_banded
from scipy.sparse.linalg import MatrixRankWarning, spsolve

from utils.errors import SolverError


class BandedSystem:
    """Square matrix with `lower` sub- and `upper` super-diagonals in LAPACK band storage.

    Entry (i, j) lives at ab[upper + i - j, j].
    """

    def __init__(self, n: int, lower: int, upper: int, dtype=float):
        self.n = n
        self.lower = lower
        self.upper = upper
        self.ab = np.zeros((lower + upper + 1, n), dtype=dtype)

    def add(self, rows, cols, values):
        rows = np.asarray(rows)
        cols = np.asarray(cols)
        offsets = self.upper + rows - cols
        if np.any(offsets < 0) or np.any(offsets > self.lower + self.upper):
            raise SolverError("Entry outside the declared bandwidth")
        np.add.at(self.ab, (offsets, cols), values)

    def add_block(self, row0: int, col0: int, block: np.ndarray):
        block = np.asarray(block)
        rows, cols = np.indices(block.shape)
        self.add(rows.ravel() + row0, cols.ravel() + col0, block.ravel())

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        try:
            return solve_banded((self.lower, self.upper), self.ab, rhs, check_finite=True)
        except (LinAlgError, ValueError) as e:
            raise SolverError(f"Banded solve failed: {e}") from e


def tridiagonal_solve(lower: np.ndarray, diag: np.ndarray, upper: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve with lower[i] at (i, i-1) and upper[i] at (i, i+1); lower[0] and upper[-1] are ignored"""
    n = len(diag)
    ab = np.zeros((3, n), dtype=np.result_type(lower, diag, upper, rhs))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    try:
        return solve_banded((1, 1), ab, rhs, check_finite=True)
    except (LinAlgError, ValueError) as e:
        raise SolverError(f"Tridiagonal solve failed: {e}") from e


def cyclic_tridiagonal_solve(
    lower: Sequence[complex], diag: Sequence[complex], upper: Sequence[complex], rhs: np.ndarray
) -> np.ndarray:
    """Periodic variant: lower[i] at (i, i-1 mod n), upper[i] at (i, i+1 mod n)"""
    n = len(diag)
    rows = np.arange(n)
    matrix = sp.coo_matrix(
        (
            np.concatenate([lower, diag, upper]),
            (np.tile(rows, 3), np.concatenate([(rows - 1) % n, rows, (rows + 1) % n])),
        ),
        shape=(n, n),
    ).tocsc()
    with warnings.catch_warnings():
        warnings.simplefilter("error", MatrixRankWarning)
        try:
            solution = spsolve(matrix, rhs)
        except (MatrixRankWarning, RuntimeError) as e:
            raise SolverError(f"Cyclic solve failed: {e}") from e
    if not np.all(np.isfinite(solution)):
        raise SolverError("Cyclic solve produced non-finite values")
    return solution
