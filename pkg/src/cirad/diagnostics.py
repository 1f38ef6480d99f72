"""Matrix figures of merit: coherence, norms, empirical RIP, baselines."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .errors import (CombinatoricsError, ConvergenceError, ShapeError,
                     ZeroColumnError)


@dataclass(frozen=True)
class MatrixReport:
    """One row of the diagnostics CSV."""

    coherence_mu: float
    min_col_norm_sq: float
    max_col_norm_sq: float
    op_norm: float
    dims: tuple
    generator_tag: str

    CSV_HEADER = ("generator_tag,seed,N,M,N_c,N_T,N_R,mu,opnorm,"
                  "min_colnorm2,max_colnorm2")

    def csv_row(self, seed: int, N: int, M: int, Nc: int, NT: int,
                NR: int) -> str:
        return (f"{self.generator_tag},{seed},{N},{M},{Nc},{NT},{NR},"
                f"{self.coherence_mu:.12g},{self.op_norm:.12g},"
                f"{self.min_col_norm_sq:.12g},{self.max_col_norm_sq:.12g}")


def _column_norms(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=0)
    if np.any(norms == 0):
        raise ZeroColumnError("matrix has a zero column")
    return norms


def mutual_coherence(matrix: np.ndarray) -> float:
    """Max |<a_i, a_j>| / (||a_i|| ||a_j||) over distinct column pairs."""
    if matrix.shape[1] < 2:
        raise ShapeError("need at least 2 columns")
    cols = matrix / _column_norms(matrix)
    gram = np.abs(cols.conj().T @ cols)
    np.fill_diagonal(gram, 0.0)
    return float(gram.max())


def mutual_coherence_naive(matrix: np.ndarray) -> float:
    """O(cols^2) pairwise scan; reference path for the Gram-based one."""
    if matrix.shape[1] < 2:
        raise ShapeError("need at least 2 columns")
    norms = _column_norms(matrix)
    best = 0.0
    for i in range(matrix.shape[1]):
        for j in range(i + 1, matrix.shape[1]):
            val = abs(np.vdot(matrix[:, i], matrix[:, j])) \
                / (norms[i] * norms[j])
            best = max(best, val)
    return best


def operator_norm(op, tol: float = 1e-8, max_iter: int = 10_000,
                  seed: int = 0) -> float:
    """Largest singular value via power iteration on the normal operator.

    `op` is a dense matrix or an object with matvec/rmatvec and shape.
    Convergence is certified by the residual ||A*A v - lam v|| <= tol*lam.
    """
    if hasattr(op, "matvec"):
        matvec, rmatvec, ncols = op.matvec, op.rmatvec, op.shape[1]
    else:
        A = np.asarray(op)
        matvec = lambda x: A @ x            # noqa: E731
        rmatvec = lambda y: A.conj().T @ y  # noqa: E731
        ncols = A.shape[1]

    normal = lambda x: rmatvec(matvec(x))  # noqa: E731
    if ncols <= 2:
        # too small for Lanczos; materialize the normal matrix instead
        eye = np.eye(ncols, dtype=np.complex128)
        nm = np.stack([normal(eye[:, j]) for j in range(ncols)], axis=1)
        lam = float(np.linalg.eigvalsh(nm)[-1])
        return float(np.sqrt(max(lam, 0.0)))

    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(ncols) + 1j * rng.standard_normal(ncols)
    nop = scipy.sparse.linalg.LinearOperator(
        (ncols, ncols), matvec=normal, dtype=np.complex128)
    try:
        # Lanczos on the normal operator; plain power iteration stalls
        # when the top two singular values are close
        lam, v = scipy.sparse.linalg.eigsh(nop, k=1, which="LM", v0=v0,
                                           tol=tol, maxiter=max_iter)
    except scipy.sparse.linalg.ArpackNoConvergence as exc:
        raise ConvergenceError(
            f"no convergence in {max_iter} iterations (tol={tol})") from exc
    lam = float(lam[0])
    v = v[:, 0]
    resid = float(np.linalg.norm(normal(v) - lam * v))
    if resid > max(tol, 1e-7) * max(lam, 1e-300) * 10.0:
        raise ConvergenceError(
            f"eigenpair residual {resid:.3g} exceeds certificate at "
            f"lam={lam:.6g}")
    return float(np.sqrt(max(lam, 0.0)))


def empirical_rip(matrix: np.ndarray, K: int, mode: str = "exhaustive",
                  n_samples: int = 1000, rng: np.random.Generator | None = None,
                  budget: int = 1_000_000) -> float:
    """Restricted-isometry constant estimate of order K.

    exhaustive: exact delta_K over all size-K supports (eigenvalues of
    each K x K Gram submatrix). sampled: lower bound from random supports.
    """
    n_cols = matrix.shape[1]
    if K < 1 or K > n_cols:
        raise ShapeError(f"K={K} out of range for {n_cols} columns")

    gram = matrix.conj().T @ matrix

    def _delta(support) -> float:
        sub = gram[np.ix_(support, support)]
        eig = np.linalg.eigvalsh(sub)
        return max(abs(eig[-1] - 1.0), abs(1.0 - eig[0]))

    if mode == "exhaustive":
        total = comb(n_cols, K)
        if total > budget:
            raise CombinatoricsError(
                f"C({n_cols},{K}) = {total} exceeds budget {budget}")
        return max(_delta(list(s)) for s in combinations(range(n_cols), K))
    if mode == "sampled":
        rng = rng or np.random.default_rng(0)
        best = 0.0
        for _ in range(n_samples):
            support = rng.choice(n_cols, size=K, replace=False)
            best = max(best, _delta(support))
        return best
    raise ShapeError(f"unknown mode {mode!r}")


def make_toeplitz_baseline(rows: int, cols: int, kind: str,
                           rng: np.random.Generator,
                           n_blocks: int = 1) -> np.ndarray:
    """Random (block-)Toeplitz comparison matrix with CN(0,1) entries.

    toeplitz_gaussian: a rows x cols Toeplitz built from rows+cols-1
    i.i.d. CN(0,1) entries (the uniformly sub-sampled convolution of a
    random waveform), column-normalized to unit norm.
    block_toeplitz: n_blocks independent such blocks side by side.
    """
    if rows > cols:
        raise ShapeError(f"need rows <= cols, got {rows} > {cols}")

    def _one(n_block_cols: int) -> np.ndarray:
        e = (rng.standard_normal(rows + n_block_cols - 1)
             + 1j * rng.standard_normal(rows + n_block_cols - 1)) / np.sqrt(2)
        return scipy.linalg.toeplitz(e[:rows], e[rows - 1:])

    if kind == "toeplitz_gaussian":
        T = _one(cols)
    elif kind == "block_toeplitz":
        if cols % n_blocks != 0:
            raise ShapeError(f"cols={cols} not divisible by {n_blocks} blocks")
        T = np.hstack([_one(cols // n_blocks) for _ in range(n_blocks)])
    else:
        raise ShapeError(f"unknown baseline kind {kind!r}")
    return T / np.linalg.norm(T, axis=0)


def matrix_report(matrix: np.ndarray, generator_tag: str) -> MatrixReport:
    norms_sq = _column_norms(matrix) ** 2
    return MatrixReport(
        coherence_mu=mutual_coherence(matrix),
        min_col_norm_sq=float(norms_sq.min()),
        max_col_norm_sq=float(norms_sq.max()),
        op_norm=operator_norm(matrix),
        dims=tuple(matrix.shape),
        generator_tag=generator_tag,
    )


def operator_norm_bound(config) -> float:
    """High-probability bound 2*sqrt((NT*N/M) * log(NR*M + NR*NT*N))."""
    N, M = config.n_range_bins_N, config.n_samples_M
    NT, NR = config.n_tx_NT, config.n_rx_NR
    return 2.0 * np.sqrt(NT * N / M * np.log(NR * M + NR * NT * N))
