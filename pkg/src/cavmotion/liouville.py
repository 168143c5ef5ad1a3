"""Deterministic master-equation tools: superoperator, steady state, integration.

Works on the field space (where the per-level conditional dynamics lives)
and on small product spaces, where direct density-matrix integration serves
as the exactness oracle for the stochastic wave-function engine.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .hilbert import DensityMatrix, Operator, UsageError, lowering


class SteadyStateError(RuntimeError):
    """Null space degenerate or residual tolerance unreachable."""


DENSE_DIM_LIMIT = 64  # operator dimension above which the dense solve is refused


@dataclass(frozen=True)
class Superoperator:
    """Single-loss-channel Lindblad generator on vectorized density matrices.

    ``matrix`` acts on row-major vec(rho); ``space``/``dims`` mirror the
    operator it was assembled from.
    """

    dim: int
    matrix: sp.csr_matrix
    space: str
    dims: tuple[int, int] | None = None

    def action(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (self.dim, self.dim):
            raise UsageError(f"expected a {self.dim}x{self.dim} density matrix")
        return (self.matrix @ rho.reshape(-1)).reshape(self.dim, self.dim)


def _photon_annihilation(space: str, dim: int, dims) -> np.ndarray:
    if space == "field":
        return lowering(dim)
    if space == "product":
        nf, npart = dims
        return np.kron(lowering(nf), np.eye(npart, dtype=complex))
    raise UsageError("loss channel acts on the field; need a field or product space")


def assemble(h: Operator, kappa: float) -> Superoperator:
    """Lindblad generator -i[h, rho] + kappa (2 a rho a^dag - {n, rho}).

    ``h`` must be Hermitian and live on the same (field or product) space as
    the photon annihilation operator.
    """
    hm = np.asarray(h.mat, dtype=complex)
    scale = max(1.0, np.abs(hm).max())
    if np.abs(hm - hm.conj().T).max() > 1e-12 * scale:
        raise UsageError("assemble expects a Hermitian Hamiltonian")
    dim = h.dim
    a = _photon_annihilation(h.space, dim, h.dims)
    n_op = a.conj().T @ a
    eye = sp.identity(dim, dtype=complex, format="csr")
    hs = sp.csr_matrix(hm)
    a_s = sp.csr_matrix(a)
    n_s = sp.csr_matrix(n_op)
    lmat = (
        -1j * (sp.kron(hs, eye) - sp.kron(eye, hs.T))
        + kappa * (2.0 * sp.kron(a_s, a_s.conj())
                   - sp.kron(n_s, eye) - sp.kron(eye, n_s.T))
    ).tocsr()
    return Superoperator(dim=dim, matrix=lmat, space=h.space, dims=h.dims)


def _clip_and_normalize(rho: np.ndarray, clip_floor: float = -1e-8) -> np.ndarray:
    rho = 0.5 * (rho + rho.conj().T)
    vals, vecs = np.linalg.eigh(rho)
    if vals.min() < clip_floor:
        raise SteadyStateError(
            f"steady-state eigenvalue {vals.min():.3e} below the clip floor {clip_floor}")
    vals = np.clip(vals, 0.0, None)
    rho = (vecs * vals) @ vecs.conj().T
    return rho / np.trace(rho).real


def steady_state(liou: Superoperator, residual_tol: float = 1e-10) -> DensityMatrix:
    """Unique trace-one null vector of the generator.

    Direct dense solve of the vectorized system with one row replaced by the
    trace constraint, plus iterative refinement; falls back to shift-invert
    eigeniteration if the direct solve cannot reach the residual tolerance.
    Tiny negative eigenvalues (above -1e-8) are clipped and the state
    renormalized; larger violations are errors.
    """
    n = liou.dim
    if n > DENSE_DIM_LIMIT:
        raise UsageError(
            f"steady_state dense solve limited to dim <= {DENSE_DIM_LIMIT}, got {n}")
    lmat = liou.matrix.toarray()
    a = lmat.copy()
    trace_row = np.zeros(n * n, dtype=complex)
    trace_row[:: n + 1] = 1.0
    a[0] = trace_row
    b = np.zeros(n * n, dtype=complex)
    b[0] = 1.0

    rho = None
    try:
        lu, piv = scipy.linalg.lu_factor(a)
        x = scipy.linalg.lu_solve((lu, piv), b)
        for _ in range(2):  # iterative refinement on the constrained system
            r = b - a @ x
            x = x + scipy.linalg.lu_solve((lu, piv), r)
        if np.isfinite(x).all():
            rho = x.reshape(n, n)
    except (scipy.linalg.LinAlgError, ValueError):
        rho = None

    if rho is not None:
        try:
            rho = _clip_and_normalize(rho)
        except SteadyStateError:
            rho = None
    if rho is not None and np.linalg.norm(liou.action(rho)) < residual_tol:
        return DensityMatrix(rho, liou.space, liou.dims)

    # fallback: smallest-magnitude eigenvector of the sparse generator
    try:
        vals, vecs = spla.eigs(liou.matrix, k=2, sigma=0.0, which="LM")
    except Exception as exc:
        raise SteadyStateError(f"steady state not found: {exc}") from exc
    order = np.argsort(np.abs(vals))
    gap = np.abs(vals[order[1]])
    cand = vecs[:, order[0]].reshape(n, n)
    tr = np.trace(cand)
    if abs(tr) < 1e-10 or gap < 1e-10:
        raise SteadyStateError(
            "degenerate null space: steady state is not unique at this tolerance")
    rho = _clip_and_normalize(cand / tr)
    resid = np.linalg.norm(liou.action(rho))
    if resid > residual_tol:
        raise SteadyStateError(
            f"steady-state residual {resid:.3e} exceeds tolerance {residual_tol}")
    return DensityMatrix(rho, liou.space, liou.dims)


def integrate_master(liou: Superoperator, rho0: DensityMatrix, times,
                     trace_tol: float = 1e-9, eig_floor: float = -1e-8) -> list[DensityMatrix]:
    """Propagate rho0 on the grid by exact action of the matrix exponential.

    Trace conservation and positivity are checked at every grid point; a
    failing point is retried with substeps once before raising.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 1 or np.any(np.diff(times) <= 0):
        raise UsageError("times must be a strictly increasing 1-d grid")
    if rho0.dim != liou.dim:
        raise UsageError("initial state dimension does not match the generator")
    rho0.validate(herm_tol=1e-10, trace_tol=1e-8, eig_floor=-1e-8)

    out = [DensityMatrix(rho0.mat.copy(), liou.space, liou.dims)]
    vec = rho0.mat.reshape(-1).astype(complex)
    lmat = liou.matrix.tocsc()
    for k in range(1, times.size):
        dt = times[k] - times[k - 1]
        nxt = spla.expm_multiply(lmat * dt, vec)
        rho = nxt.reshape(liou.dim, liou.dim)
        tr_err = abs(np.trace(rho).real - 1.0)
        min_eig = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()
        if tr_err > trace_tol or min_eig < eig_floor:
            fine = spla.expm_multiply(lmat * (dt / 4.0), vec)
            for _ in range(3):
                fine = spla.expm_multiply(lmat * (dt / 4.0), fine)
            rho = fine.reshape(liou.dim, liou.dim)
            tr_err = abs(np.trace(rho).real - 1.0)
            min_eig = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()
            if tr_err > trace_tol or min_eig < eig_floor:
                raise UsageError(
                    f"master-equation step to t={times[k]} violates trace "
                    f"({tr_err:.2e}) or positivity ({min_eig:.2e})")
            nxt = fine
        vec = nxt
        out.append(DensityMatrix(0.5 * (rho + rho.conj().T), liou.space, liou.dims))
    return out
