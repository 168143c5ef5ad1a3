"""Low-dimensional separable-state subspaces that track the full dynamics.

Two constructions: the self-consistent coherent-branch subspace (one product
state per vibrational level, good at moderate coupling) and the extended
subspace built from leading eigenvectors of the per-level conditional steady
states with an eigenvalue cutoff, which keeps working at strong coupling.
Both produce orthonormalized bases embedded in the full product space plus
projector diagnostics for trajectory analysis.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .hilbert import (
    ConfigurationError,
    QuantumState,
    UsageError,
    coherent_amplitudes,
    orthonormalize,
)
from .liouville import assemble, steady_state
from .mcwf import ProjectorObservable
from .model import (
    DerivedScales,
    ModelOptions,
    SystemParams,
    build_effective_hamiltonian,
    embed_oscillator_state,
    make_particle_basis,
)


class FixedPointError(RuntimeError):
    """Self-consistent field amplitude did not converge (possible bistability)."""

    def __init__(self, message, last_iterates=None):
        super().__init__(message)
        self.last_iterates = last_iterates


@dataclass(frozen=True)
class CoherentBranch:
    """Self-consistent coherent amplitude and trap length for one level m."""

    m: int
    alpha: complex
    xi: float
    iterations: int
    residual: float


def _effective_detuning(params: SystemParams, scales: DerivedScales,
                        photon_number: float, m: int) -> float:
    # mode frequency shift from the particle's position variance xi^2 (m + 1/2)
    xi2 = float(scales.oscillator_length(photon_number)) ** 2
    return params.delta_c - abs(params.u0) * xi2 * (m + 0.5)


def solve_coherent_branch(params: SystemParams, m: int, damping: float = 0.5,
                          max_iter: int = 10000, tol: float = 1e-10) -> CoherentBranch:
    """Fixed point of alpha = eta / (kappa - i Delta_eff(|alpha|^2, m)).

    Damped iteration from alpha = 0; non-convergence is surfaced with the
    last two iterates attached rather than silently accepted, since strong
    coupling can be bistable.
    """
    if params.kappa <= 0:
        raise ConfigurationError("coherent branch needs kappa > 0")
    scales = DerivedScales(params)

    def pump_response(alpha: complex) -> complex:
        d_eff = _effective_detuning(params, scales, abs(alpha) ** 2, m)
        return params.eta / (params.kappa - 1j * d_eff)

    if params.eta == 0.0:
        return CoherentBranch(m, 0.0 + 0.0j, float(scales.oscillator_length(0.0)), 0, 0.0)
    if params.u0 == 0.0:
        alpha = pump_response(0.0)
        return CoherentBranch(m, alpha, float(scales.oscillator_length(abs(alpha) ** 2)),
                              1, abs(alpha - pump_response(alpha)))

    alpha = 0.0 + 0.0j
    prev = alpha
    for it in range(1, max_iter + 1):
        target = pump_response(alpha)
        nxt = (1.0 - damping) * alpha + damping * target
        residual = abs(nxt - pump_response(nxt))
        prev, alpha = alpha, nxt
        if residual < tol:
            return CoherentBranch(m, alpha, float(scales.oscillator_length(abs(alpha) ** 2)),
                                  it, residual)
    raise FixedPointError(
        f"coherent branch m={m} did not converge in {max_iter} iterations "
        f"(last iterates {prev}, {alpha})", last_iterates=(prev, alpha))


@dataclass(frozen=True)
class SubspaceBasis:
    """Orthonormalized spanning set with per-vector provenance metadata.

    ``vectors_meta[k]`` describes raw vector k: its level m, eigenvector
    index i, coherent amplitude or steady-state eigenvalue, trap length and
    particle-embedding residual.  ``n_m`` counts kept vectors per level.
    """

    kind: str
    raw_vectors: list
    ortho_vectors: list
    vectors_meta: list
    n_m: dict
    dims: tuple[int, int]
    epsilon: float | None = None

    def projector_observable(self) -> ProjectorObservable:
        """<P> over the orthonormalized span."""
        return ProjectorObservable(np.stack([u.vec for u in self.ortho_vectors]))

    def branch_projector(self, m: int) -> ProjectorObservable:
        """Rank-1 projector onto the single (normalized) raw vector of level m."""
        idx = [k for k, meta in enumerate(self.vectors_meta) if meta["m"] == m]
        if not idx:
            raise UsageError(f"no basis vector for m={m}")
        vecs = np.stack([self.raw_vectors[k].vec for k in idx])
        return ProjectorObservable(vecs if len(idx) == 1 else
                                   np.stack([u.vec for u in orthonormalize(
                                       [self.raw_vectors[k] for k in idx])]))

    def naive_projector_observable(self):
        """Sum of non-orthogonalized rank-1 projectors, for comparison only."""
        raws = np.stack([v.vec for v in self.raw_vectors])

        def naive(psi):
            amps = raws.conj() @ psi
            return float(np.sum(np.abs(amps) ** 2))
        return naive


def _embed_product(field_vec: np.ndarray, m: int, xi: float, basis,
                   n_fock: int) -> tuple[QuantumState, float]:
    coeffs, residual = embed_oscillator_state(m, xi, basis)
    raw = np.kron(field_vec, coeffs)
    nrm = np.linalg.norm(raw)
    if nrm < 1e-8:
        raise UsageError(
            f"oscillator state m={m} cannot be represented in the retained basis")
    total_residual = float(max(residual, 1.0 - nrm ** 2))
    return QuantumState(raw / nrm, "product", (n_fock, basis.dim)), total_residual


def build_coherent_subspace(params: SystemParams, m_list, opts: ModelOptions,
                            tail_tol: float = 1e-6) -> SubspaceBasis:
    """Subspace spanned by the self-consistent coherent-branch product states."""
    pbasis = make_particle_basis(params, opts)
    n_fock = opts.trunc.n_fock
    raws, metas = [], []
    for m in m_list:
        branch = solve_coherent_branch(params, m)
        amps = coherent_amplitudes(branch.alpha, n_fock)
        tail = 1.0 - float(np.vdot(amps, amps).real)
        if tail > tail_tol:
            raise ConfigurationError(
                f"coherent branch m={m}: photon tail {tail:.2e} beyond n_fock={n_fock}; "
                "increase the Fock cutoff")
        field_vec = amps / np.linalg.norm(amps)
        state, residual = _embed_product(field_vec, m, branch.xi, pbasis, n_fock)
        raws.append(state)
        metas.append({"m": int(m), "i": 1, "alpha": branch.alpha, "xi": branch.xi,
                      "weight": 1.0, "embedding_residual": residual})
    ortho = orthonormalize(raws, tol=1e-10)
    return SubspaceBasis(kind="coherent", raw_vectors=raws, ortho_vectors=ortho,
                         vectors_meta=metas, n_m={int(m): 1 for m in m_list},
                         dims=(n_fock, pbasis.dim))


def _fix_phase(vec: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(vec)))
    ph = vec[k] / abs(vec[k])
    return vec * ph.conjugate()


def build_effective_subspace(params: SystemParams, m_list, epsilon: float,
                             opts: ModelOptions) -> SubspaceBasis:
    """Separable approximations of the leading conditional steady-state eigenvectors.

    For each level m the conditional field Hamiltonian is solved for its
    steady state, the eigenvectors above the spectrum cutoff ``epsilon`` are
    kept (N_m of them), and each is paired with the oscillator eigenstate
    whose length matches the eigenvector's mean photon number.
    """
    if not 0.0 < epsilon < 1.0:
        raise ConfigurationError(f"epsilon must lie in (0, 1), got {epsilon}")
    pbasis = make_particle_basis(params, opts)
    n_fock = opts.trunc.n_fock
    scales = DerivedScales(params)
    raws, metas = [], []
    n_m: dict[int, int] = {}
    for m in m_list:
        try:
            h_m = build_effective_hamiltonian(params, m, n_fock)
            rho_ss = steady_state(assemble(h_m, params.kappa))
        except Exception as exc:
            raise RuntimeError(f"conditional steady state failed for m={m}: {exc}") from exc
        vals, vecs = np.linalg.eigh(rho_ss.mat)
        order = np.argsort(vals)[::-1]
        kept = [k for k in order if vals[k] >= epsilon]
        n_m[int(m)] = len(kept)
        for rank, k in enumerate(kept, start=1):
            phi = _fix_phase(vecs[:, k])
            mean_n = float(np.sum(np.arange(n_fock) * np.abs(phi) ** 2))
            xi = float(scales.oscillator_length(mean_n))
            state, residual = _embed_product(phi, m, xi, pbasis, n_fock)
            raws.append(state)
            metas.append({"m": int(m), "i": rank, "eigenvalue": float(vals[k]),
                          "xi": xi, "weight": float(vals[k]),
                          "embedding_residual": residual})
    ortho = orthonormalize(raws, tol=1e-10)
    return SubspaceBasis(kind="effective", raw_vectors=raws, ortho_vectors=ortho,
                         vectors_meta=metas, n_m=n_m, dims=(n_fock, pbasis.dim),
                         epsilon=epsilon)


def projector_expectation(basis: SubspaceBasis, psi: QuantumState) -> float:
    """Expectation of the subspace projector, in [0, 1] up to roundoff."""
    if psi.vec.size != basis.dims[0] * basis.dims[1]:
        raise UsageError("state dimension does not match the basis embedding")
    total = 0.0
    for u in basis.ortho_vectors:
        total += abs(np.vdot(u.vec, psi.vec)) ** 2
    return float(total)


# ---------------------------------------------------------------------------
# structured export for reuse across runs


def basis_to_dict(basis: SubspaceBasis) -> dict:
    def enc_meta(meta):
        out = dict(meta)
        if "alpha" in out:
            out["alpha"] = [out["alpha"].real, out["alpha"].imag]
        return out

    def enc_vec(state):
        return [[float(z.real), float(z.imag)] for z in state.vec]

    return {
        "kind": basis.kind,
        "epsilon": basis.epsilon,
        "dims": list(basis.dims),
        "n_m": {str(k): v for k, v in basis.n_m.items()},
        "vectors_meta": [enc_meta(m) for m in basis.vectors_meta],
        "raw_vectors": [enc_vec(v) for v in basis.raw_vectors],
        "ortho_vectors": [enc_vec(v) for v in basis.ortho_vectors],
    }


def basis_from_dict(payload: dict) -> SubspaceBasis:
    dims = tuple(payload["dims"])

    def dec_meta(meta):
        out = dict(meta)
        if "alpha" in out and isinstance(out["alpha"], list):
            out["alpha"] = complex(out["alpha"][0], out["alpha"][1])
        return out

    def dec_vec(rows):
        return QuantumState(np.array([complex(r, i) for r, i in rows]), "product", dims)

    return SubspaceBasis(
        kind=payload["kind"],
        raw_vectors=[dec_vec(v) for v in payload["raw_vectors"]],
        ortho_vectors=[dec_vec(v) for v in payload["ortho_vectors"]],
        vectors_meta=[dec_meta(m) for m in payload["vectors_meta"]],
        n_m={int(k): v for k, v in payload["n_m"].items()},
        dims=dims,
        epsilon=payload["epsilon"],
    )


def save_basis(basis: SubspaceBasis, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(basis_to_dict(basis), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_basis(path) -> SubspaceBasis:
    with open(path, encoding="utf-8") as fh:
        return basis_from_dict(json.load(fh))
