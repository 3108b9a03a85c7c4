"""Symmetric eigendecomposition and dynamic principal component analysis.

The eigensolver is a cyclic Jacobi iteration. At the matrix sizes a
volatility panel produces (d up to ~100) Jacobi is simple and robust, and
it delivers eigenvector orthogonality near machine precision, which is what
the explained-variance ratios downstream depend on.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

if TYPE_CHECKING:  # pragma: no cover
    from .estimator import VolPath

SYMMETRY_RTOL = 1e-10   # gate on max|A - A.T| relative to max|A|
OFFDIAG_FTOL = 1e-12    # sweep until off-diagonal Frobenius mass is this small
MAX_SWEEPS = 50
CLAMP_RTOL = 1e-10      # eigenvalues below -CLAMP_RTOL * trace are an error


def symm_eigen(a) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a real symmetric matrix by cyclic Jacobi rotations.

    Returns ``(w, q)`` with eigenvalues ``w`` sorted descending and orthonormal
    eigenvectors in the columns of ``q``, so that ``a ~= q @ diag(w) @ q.T``.
    Each eigenvector is normalized to have its first nonzero component
    positive, so repeated runs produce identical output.

    Raises ``ValueError`` when ``a`` is not symmetric within
    ``1e-10 * max|a|``.
    """
    mat = np.array(a, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {mat.shape}")
    n = mat.shape[0]
    if n == 0:
        raise ValueError("expected a nonempty matrix")
    scale = float(np.max(np.abs(mat)))
    asym = float(np.max(np.abs(mat - mat.T)))
    if asym > SYMMETRY_RTOL * scale:
        raise ValueError(
            f"matrix is not symmetric: max|A - A.T| = {asym:.3e} exceeds "
            f"{SYMMETRY_RTOL:.0e} * max|A| = {SYMMETRY_RTOL * scale:.3e}"
        )
    # Rounding in the caller may leave a harmless asymmetry below the gate;
    # the rotations assume exact symmetry, so mirror the upper triangle.
    mat = np.triu(mat) + np.triu(mat, 1).T
    vecs = np.eye(n)
    norm_f = float(np.linalg.norm(mat))
    if norm_f > 0.0:
        for _ in range(MAX_SWEEPS):
            off = math.sqrt(2.0 * float(np.sum(np.triu(mat, 1) ** 2)))
            if off <= OFFDIAG_FTOL * norm_f:
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = mat[p, q]
                    if apq == 0.0:
                        continue
                    theta = (mat[q, q] - mat[p, p]) / (2.0 * apq)
                    t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                    c = 1.0 / math.sqrt(1.0 + t * t)
                    s = t * c
                    col_p = mat[:, p].copy()
                    col_q = mat[:, q].copy()
                    mat[:, p] = c * col_p - s * col_q
                    mat[:, q] = s * col_p + c * col_q
                    row_p = mat[p, :].copy()
                    row_q = mat[q, :].copy()
                    mat[p, :] = c * row_p - s * row_q
                    mat[q, :] = s * row_p + c * row_q
                    mat[p, q] = 0.0
                    mat[q, p] = 0.0
                    vec_p = vecs[:, p].copy()
                    vec_q = vecs[:, q].copy()
                    vecs[:, p] = c * vec_p - s * vec_q
                    vecs[:, q] = s * vec_p + c * vec_q
    eigvals = np.diag(mat).copy()
    order = np.argsort(-eigvals, kind="stable")
    eigvals = eigvals[order]
    vecs = vecs[:, order]
    for col in range(n):
        v = vecs[:, col]
        nz = np.flatnonzero(np.abs(v) > 1e-12)
        if nz.size and v[nz[0]] < 0.0:
            vecs[:, col] = -v
    return eigvals, vecs


@dataclass(frozen=True)
class EigenReport:
    """Eigenvalues and cumulative explained-variance ratios at one time."""

    t: float
    eigenvalues: np.ndarray  # descending, clamped to be >= 0
    ratios: np.ndarray       # cumulative shares, length min(top, d)


@dataclass(frozen=True)
class PcaPath:
    """Sequence of eigen reports over a strictly increasing time grid."""

    reports: tuple[EigenReport, ...]

    def __post_init__(self) -> None:
        times = [r.t for r in self.reports]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("report times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.reports)

    def __iter__(self):
        return iter(self.reports)

    @property
    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.reports])


def pca_ratios(path: "VolPath | Sequence", top: int = 3) -> PcaPath:
    """Eigenvalues and cumulative explained-variance ratios along a matrix path.

    Eigenvalues in ``[-1e-10 * trace, 0)`` are clamped to zero before the
    ratios are formed, so every ratio lies in [0, 1]. An eigenvalue below
    ``-1e-10 * trace`` means the input did not come from a positive
    semi-definite estimator and raises ``ValueError``, as does a matrix with
    nonpositive trace.
    """
    if top < 1:
        raise ValueError("top must be a positive integer")
    reports = []
    for t, entries in zip(path.times, path.matrices):
        tr = float(np.trace(entries))
        if tr <= 0.0:
            raise ValueError(f"degenerate volatility matrix at t={t}: trace={tr:.3e}")
        try:
            eigvals, _ = symm_eigen(entries)
        except ValueError as exc:
            raise ValueError(f"at t={t}: {exc}") from exc
        floor = -CLAMP_RTOL * tr
        worst = float(eigvals[-1])
        if worst < floor:
            raise ValueError(
                f"eigenvalue {worst:.6e} below -1e-10 * trace at t={t}: "
                "matrix is not positive semi-definite within tolerance"
            )
        clamped = np.maximum(eigvals, 0.0)
        total = float(np.sum(clamped))
        count = min(top, clamped.size)
        ratios = np.cumsum(clamped[:count]) / total
        reports.append(EigenReport(t=float(t), eigenvalues=clamped, ratios=ratios))
    return PcaPath(reports=tuple(reports))


def rank_estimate(report: EigenReport, threshold: float) -> int:
    """Smallest m with cumulative share >= threshold; d when none reaches it."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie strictly between 0 and 1")
    for m, r in enumerate(report.ratios, start=1):
        if r >= threshold:
            return m
    return int(report.eigenvalues.size)


def write_pca_csv(pca: PcaPath, path) -> None:
    """Write a PCA path as CSV: t, lambda_1..lambda_d, r1..r_k."""
    if not pca.reports:
        raise ValueError("cannot write an empty PCA path")
    d = pca.reports[0].eigenvalues.size
    k = pca.reports[0].ratios.size
    header = ["t"] + [f"lambda_{i + 1}" for i in range(d)] + [f"r{m + 1}" for m in range(k)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for rep in pca.reports:
            row = [repr(rep.t)]
            row += [repr(float(x)) for x in rep.eigenvalues]
            row += [repr(float(x)) for x in rep.ratios]
            writer.writerow(row)
