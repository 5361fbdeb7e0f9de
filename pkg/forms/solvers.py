"""
Symmetric positive definite solves.

Small systems use a dense Cholesky factorization, larger ones a conjugate
gradient iteration preconditioned by the inverse element blocks.
"""
import logging
import threading
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.sparse.linalg import splu

from shared.config import settings
from shared.errors import SingularSystemError

logger = logging.getLogger(__name__)

SOLVER_METHODS = ("auto", "direct", "pcg")


class SolveCounter:
    """Process-wide count of linear solves"""

    def __init__(self):
        self._lock = threading.Lock()
        self._count = 0

    def increment(self) -> None:
        with self._lock:
            self._count += 1

    @property
    def value(self) -> int:
        return self._count


solve_counter = SolveCounter()


def block_jacobi(A: sp.spmatrix, block_size: int) -> np.ndarray:
    """Inverses of the diagonal blocks, shape (n / block_size, bs, bs)"""
    n = A.shape[0]
    if n % block_size:
        raise ValueError(f"Block size {block_size} does not divide system size {n}")
    blocks = n // block_size
    idx = np.arange(n).reshape(blocks, block_size)
    rows = np.repeat(idx, block_size, axis=1).ravel()
    cols = np.tile(idx, (1, block_size)).ravel()
    dense = np.asarray(sp.csr_matrix(A)[rows, cols]).reshape(blocks, block_size, block_size)
    try:
        np.linalg.cholesky(dense)
    except np.linalg.LinAlgError as e:
        raise SingularSystemError(f"Preconditioner block is not positive definite: {e}")
    return np.linalg.inv(dense)


class SpdSolver:
    """Factorized (or preconditioned) solver for one SPD matrix"""

    def __init__(self, A: sp.spmatrix, method: str = "auto", block_size: int = 1,
                 tol: Optional[float] = None, max_iterations: Optional[int] = None):
        if method not in SOLVER_METHODS:
            raise ValueError(f"Unknown solver method '{method}', expected one of {SOLVER_METHODS}")
        if A.shape[0] != A.shape[1]:
            raise ValueError(f"Matrix must be square, got shape {A.shape}")
        self.A = sp.csr_matrix(A)
        self.n = A.shape[0]
        self.tol = tol if tol is not None else settings.solver_tol
        self.max_iterations = max_iterations if max_iterations is not None else settings.solver_max_iterations
        if method == "auto":
            method = "direct" if self.n <= settings.direct_solver_max_unknowns else "pcg"
        self.method = method
        self.block_size = block_size
        self._factor = None
        self._lu = None
        self._preconditioner = None
        if method == "direct":
            self._factorize()

    def _factorize(self) -> None:
        if self.n <= settings.direct_solver_max_unknowns:
            try:
                self._factor = cho_factor(self.A.toarray(), lower=True)
            except LinAlgError as e:
                raise SingularSystemError(f"Cholesky factorization failed: {e}")
        else:
            self._lu = splu(sp.csc_matrix(self.A))

    def solve(self, b: np.ndarray) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        solve_counter.increment()
        if not np.any(b):
            return np.zeros_like(b)
        if self.method == "direct":
            x = self._direct_solve(b)
        else:
            x = self._pcg(b)
        if not np.all(np.isfinite(x)):
            raise SingularSystemError("Linear solve produced non-finite values")
        return x

    def _pcg(self, b: np.ndarray) -> np.ndarray:
        if self._preconditioner is None:
            self._preconditioner = block_jacobi(self.A, self.block_size)
        inverse = self._preconditioner
        bs = self.block_size

        def precondition(r):
            return np.einsum("kij,kj->ki", inverse, r.reshape(-1, bs)).reshape(-1)

        b_norm = np.linalg.norm(b)
        x = np.zeros_like(b)
        r = b.copy()
        z = precondition(r)
        p = z.copy()
        rz = r @ z
        residual = 1.0
        for iteration in range(1, self.max_iterations + 1):
            Ap = self.A @ p
            pAp = p @ Ap
            if pAp <= 0.0:
                raise SingularSystemError(f"CG breakdown at iteration {iteration}: p.Ap = {pAp:.3e}")
            alpha = rz / pAp
            x += alpha * p
            r -= alpha * Ap
            residual = np.linalg.norm(r) / b_norm
            if residual <= self.tol:
                logger.debug(f"[solver] PCG converged in {iteration} iterations, residual {residual:.2e}")
                return x
            z = precondition(r)
            rz_new = r @ z
            p = z + (rz_new / rz) * p
            rz = rz_new
        raise SingularSystemError(
            f"PCG did not reach {self.tol:.1e} in {self.max_iterations} iterations (residual {residual:.2e})"
        )

    def _direct_solve(self, b: np.ndarray) -> np.ndarray:
        if self._factor is not None:
            return cho_solve(self._factor, b)
        return self._lu.solve(b)


def solve_spd(A: sp.spmatrix, b: np.ndarray, tol: Optional[float] = None, method: str = "auto",
              block_size: int = 1) -> np.ndarray:
    """Solve A x = b for symmetric positive definite A"""
    return SpdSolver(A, method=method, block_size=block_size, tol=tol).solve(b)
