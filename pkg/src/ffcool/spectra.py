"""Sector Hamiltonian assembly, lowest eigenpairs, and gap-scaling fits."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import CapacityError, NonConvergenceError
from .models import LayeredModel
from .statevec import kernels_for

DENSE_FALLBACK_DIM = 4100
DEGENERACY_TOL = 1e-10
RESIDUAL_TOL = 1e-10
MAX_ITER = 5000


@dataclass
class GapResult:
    e0: float
    e1: float
    gap: float
    ground: np.ndarray
    degeneracy: int = 1
    residual: float = 0.0
    iterations: int = 0
    eigenvalues: np.ndarray = field(default_factory=lambda: np.empty(0))

    def to_dict(self) -> dict:
        return {
            "e0": self.e0,
            "e1": self.e1,
            "gap": self.gap,
            "degeneracy": self.degeneracy,
            "residual": self.residual,
        }


def assemble(model: LayeredModel) -> sp.csr_matrix:
    """Sparse H = sum_i P_i restricted to the model's sector basis."""
    dim = model.basis.size
    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    vals: list[np.ndarray] = []
    for kern in kernels_for(model):
        M = kern.term.matrix
        mloc = kern.term.local_dim()
        # ordinal table: group x local -> basis ordinal (or -1)
        table = -np.ones((kern.n_groups, mloc), dtype=np.int64)
        table[kern.gid, kern.loc] = kern.order
        nz = np.argwhere(np.abs(M) > 1e-15)
        for l_out, l_in in nz:
            r = table[:, l_out]
            c = table[:, l_in]
            ok = (r >= 0) & (c >= 0)
            rows.append(r[ok])
            cols.append(c[ok])
            vals.append(np.full(int(ok.sum()), M[l_out, l_in]))
    H = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim, dim),
        dtype=complex,
    ).tocsr()
    asym = H - H.getH()
    if asym.nnz and np.max(np.abs(asym.data)) > 1e-12:
        raise ValueError("assembled Hamiltonian is not hermitian")
    return H


def hamiltonian(model: LayeredModel) -> sp.csr_matrix:
    """Assembled sector Hamiltonian, cached on the model."""
    H = getattr(model, "_hamiltonian", None)
    if H is None:
        H = assemble(model)
        model._hamiltonian = H
    return H


def lowest_pair(H: sp.spmatrix, n_eigs: int = 4) -> GapResult:
    """Lowest eigenpairs with degeneracy detection.

    Dense below DENSE_FALLBACK_DIM; Lanczos (ARPACK, full reorthogonalization,
    which='SA') above.  The gap is measured from the ground manifold to the
    first level above it.
    """
    dim = H.shape[0]
    if dim < 2:
        raise ValueError("need dimension >= 2")
    if sp.issparse(H):
        asym = (H - H.getH())
        if asym.nnz and np.max(np.abs(asym.data)) > 1e-12:
            raise ValueError("Hamiltonian is not hermitian")
    iterations = 0
    if dim <= DENSE_FALLBACK_DIM:
        Hd = H.toarray() if sp.issparse(H) else np.asarray(H)
        evals, evecs = np.linalg.eigh(Hd)
    else:
        k = min(max(n_eigs, 4), dim - 1)
        try:
            evals, evecs = spla.eigsh(
                H.astype(complex), k=k, which="SA", tol=RESIDUAL_TOL, maxiter=MAX_ITER
            )
        except spla.ArpackNoConvergence as exc:  # pragma: no cover
            raise NonConvergenceError(f"eigsh failed to converge: {exc}") from exc
        order = np.argsort(evals)
        evals, evecs = evals[order], evecs[:, order]
        iterations = MAX_ITER  # ARPACK does not report; record the budget
    e0 = float(evals[0])
    degeneracy = int(np.sum(evals - e0 < DEGENERACY_TOL))
    if degeneracy >= len(evals):
        raise NonConvergenceError(
            "all computed eigenvalues are degenerate with the ground level; "
            "increase n_eigs"
        )
    e1 = float(evals[degeneracy])
    ground = np.ascontiguousarray(evecs[:, 0])
    residual = float(np.linalg.norm(H @ ground - e0 * ground))
    return GapResult(
        e0=e0,
        e1=e1,
        gap=e1 - e0,
        ground=ground,
        degeneracy=degeneracy,
        residual=residual,
        iterations=iterations,
        eigenvalues=np.asarray(evals[: max(n_eigs, degeneracy + 1)], dtype=float),
    )


def gap_for(model: LayeredModel) -> GapResult:
    res = getattr(model, "_gap_result", None)
    if res is None:
        res = lowest_pair(hamiltonian(model))
        model._gap_result = res
    return res


@dataclass
class GapScalingFit:
    z: float
    z_err: float
    slope: float
    residuals: np.ndarray
    sizes: np.ndarray
    gaps: np.ndarray

    def to_dict(self) -> dict:
        return {
            "z": self.z,
            "z_err": self.z_err,
            "slope": self.slope,
            "sizes": self.sizes.tolist(),
            "gaps": self.gaps.tolist(),
        }


def gap_scaling_fit(sizes, gaps, dim: int = 1) -> GapScalingFit:
    """Least squares of log(gap) on log(N): Delta ~ N^{-z/d}."""
    sizes = np.asarray(sizes, dtype=float)
    gaps = np.asarray(gaps, dtype=float)
    if sizes.size < 2:
        raise ValueError("need at least 2 sizes")
    if sizes.max() / sizes.min() < 1.5:
        raise ValueError("degenerate fit: sizes span less than a factor 1.5")
    x = np.log(sizes)
    y = np.log(gaps)
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    yhat = A @ coef
    resid = y - yhat
    n = len(x)
    if n > 2:
        s2 = float(resid @ resid) / (n - 2)
        cov = s2 * np.linalg.inv(A.T @ A)
        slope_err = float(np.sqrt(cov[0, 0]))
    else:
        slope_err = 0.0
    slope = float(coef[0])
    return GapScalingFit(
        z=-slope * dim,
        z_err=slope_err * dim,
        slope=slope,
        residuals=resid,
        sizes=sizes,
        gaps=gaps,
    )
