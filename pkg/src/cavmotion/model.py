"""Coupled field-particle model: Hamiltonians, loss channel, derived scales.

The particle moves along the cavity axis in the photon-number dependent
optical potential of a single driven, lossy standing-wave mode.  Everything
is expressed in dimensionless units: position in 1/K, momentum in hbar*K,
and rates/energies in whatever frequency unit the caller adopts (hbar = 1).
The conventional choice sets the recoil frequency to 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .hilbert import (
    ConfigurationError,
    Operator,
    fock_ops,
    lowering,
    tensor,
)


@dataclass(frozen=True)
class SystemParams:
    """Physical rates and energies of the driven cavity + particle.

    kappa      cavity amplitude decay rate (mode linewidth)
    v0         classical potential depth, <= 0
    u0         optical potential depth per photon (light shift), <= 0
    delta_c    pump-cavity detuning, in the convention where the single-photon
               light shift has already been absorbed into it
    eta        cavity pump amplitude
    omega_rec  recoil frequency (kinetic-energy scale of the particle)
    """

    kappa: float
    v0: float
    u0: float
    delta_c: float
    eta: float
    omega_rec: float = 1.0

    def __post_init__(self):
        if self.v0 > 0 or self.u0 > 0:
            raise ConfigurationError(
                f"v0 and u0 must be <= 0 (trapping regime), got v0={self.v0}, u0={self.u0}"
            )
        if self.kappa < 0:
            raise ConfigurationError(f"kappa must be >= 0, got {self.kappa}")
        if self.omega_rec < 0:
            raise ConfigurationError(f"omega_rec must be >= 0, got {self.omega_rec}")

    @classmethod
    def from_kappa_units(cls, kappa: float, v0: float, delta_c: float, eta: float,
                         u0: float, omega_rec: float = 1.0) -> "SystemParams":
        """Build params with (delta_c, eta, u0) quoted in units of kappa.

        ``kappa`` and ``v0`` are given directly in the base frequency unit
        (conventionally omega_rec = 1), matching how coupled-cavity parameter
        sets are usually quoted.
        """
        return cls(kappa=kappa, v0=v0, u0=u0 * kappa, delta_c=delta_c * kappa,
                   eta=eta * kappa, omega_rec=omega_rec)


class DerivedScales:
    """Photon-number dependent potential depth, trap frequency and length.

    Accepts scalars or arrays for the photon number argument, which may also
    be a non-integer mean value.
    """

    def __init__(self, params: SystemParams):
        self.params = params

    def potential_depth(self, n):
        return abs(self.params.v0) + abs(self.params.u0) * np.asarray(n, dtype=float)

    def trap_frequency(self, n):
        return 2.0 * np.sqrt(self.params.omega_rec * self.potential_depth(n))

    def oscillator_length(self, n):
        depth = self.potential_depth(n)
        if np.any(depth <= 0):
            raise ConfigurationError("potential depth vanishes; oscillator length undefined")
        return (self.params.omega_rec / depth) ** 0.25


@dataclass(frozen=True)
class TruncationConfig:
    """Basis truncation: Fock cutoff, particle level count, reference length.

    ``m_levels`` counts retained particle basis functions.  Under the even
    parity restriction those are the oscillator states 0, 2, ..., and the
    top retained quantum number is 2*(m_levels - 1).  ``xi_ref`` defaults to
    the oscillator length at the pump-rate photon scale |eta/kappa|^2.
    """

    n_fock: int
    m_levels: int
    xi_ref: float | None = None

    def __post_init__(self):
        if self.n_fock < 2 or self.m_levels < 2:
            raise ConfigurationError(
                f"need n_fock >= 2 and m_levels >= 2, got {self.n_fock}, {self.m_levels}"
            )
        if self.xi_ref is not None and self.xi_ref <= 0:
            raise ConfigurationError("xi_ref must be positive")

    def resolve_xi_ref(self, params: SystemParams) -> float:
        if self.xi_ref is not None:
            return self.xi_ref
        scales = DerivedScales(params)
        n_scale = round(abs(params.eta / params.kappa) ** 2) if params.kappa > 0 else 0
        return float(scales.oscillator_length(n_scale))


@dataclass(frozen=True)
class ModelOptions:
    potential: str = "harmonic"  # "harmonic" | "cos2"
    parity: str = "even_only"    # "even_only" | "full"
    trunc: TruncationConfig = field(default_factory=lambda: TruncationConfig(16, 8))

    def __post_init__(self):
        if self.potential not in ("harmonic", "cos2"):
            raise ConfigurationError(f"unknown potential option {self.potential!r}")
        if self.parity not in ("even_only", "full"):
            raise ConfigurationError(f"unknown parity option {self.parity!r}")
        if self.potential == "cos2" and self.parity == "even_only" and self.trunc.m_levels < 4:
            raise ConfigurationError(
                "cos^2 matrix elements need at least 4 even particle levels"
            )


@dataclass(frozen=True)
class ParticleBasis:
    """Retained oscillator basis (possibly parity-restricted) and its matrices.

    ``cos2`` is only materialized when the cosine-mode potential is in use.
    """

    xi_ref: float
    indices: tuple[int, ...]
    x2: np.ndarray
    p2: np.ndarray
    cos2: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return len(self.indices)


def parity_operator(m_levels: int) -> Operator:
    """Particle parity on the full oscillator basis: diag((-1)^m)."""
    return Operator(np.diag((-1.0 + 0j) ** np.arange(m_levels)), "particle")


def cos2_matrix(n_levels: int, xi: float, n_nodes: int | None = None) -> np.ndarray:
    """Matrix of cos^2(x) in the oscillator basis of length ``xi``.

    Gauss-Hermite quadrature at 4x the basis size, with the square root of
    the weight folded into the Hermite recurrence so all intermediates stay
    O(1) regardless of basis size.
    """
    from scipy.special import roots_hermite

    if n_nodes is None:
        n_nodes = 4 * n_levels
    u, w = roots_hermite(n_nodes)
    vals = np.empty((n_levels, n_nodes))
    vals[0] = np.pi ** -0.25 * np.sqrt(w)
    if n_levels > 1:
        vals[1] = np.sqrt(2.0) * u * vals[0]
    for m in range(1, n_levels - 1):
        vals[m + 1] = np.sqrt(2.0 / (m + 1)) * u * vals[m] - np.sqrt(m / (m + 1)) * vals[m - 1]
    f = np.cos(xi * u) ** 2
    return vals @ (f[:, None] * vals.T)


def make_particle_basis(params: SystemParams, opts: ModelOptions,
                        include_cos2: bool | None = None) -> ParticleBasis:
    """Particle-space matrices on the retained (possibly even-only) basis.

    Parity-even operators are built on the full basis large enough to cover
    the top retained quantum number and then sliced, which is exact because
    they never mix parities.
    """
    trunc = opts.trunc
    xi_ref = trunc.resolve_xi_ref(params)
    if opts.parity == "even_only":
        full = 2 * trunc.m_levels
        keep = np.arange(0, full, 2)[: trunc.m_levels]
    else:
        full = trunc.m_levels
        keep = np.arange(full)
    c = lowering(full)
    x = (xi_ref / np.sqrt(2.0)) * (c + c.conj().T)
    p = (1j / (np.sqrt(2.0) * xi_ref)) * (c.conj().T - c)
    x2 = (x @ x).real[np.ix_(keep, keep)]
    p2 = (p @ p).real[np.ix_(keep, keep)]
    if include_cos2 is None:
        include_cos2 = opts.potential == "cos2"
    c2 = cos2_matrix(full, xi_ref)[np.ix_(keep, keep)] if include_cos2 else None
    return ParticleBasis(xi_ref=xi_ref, indices=tuple(int(k) for k in keep),
                         x2=x2, p2=p2, cos2=c2)


def _hermitize(h: np.ndarray) -> np.ndarray:
    return 0.5 * (h + h.conj().T)


def build_hamiltonian(params: SystemParams, opts: ModelOptions) -> Operator:
    """Full product-space Hamiltonian of the coupled field-particle system.

    Harmonic option:
        H = omega_rec p^2 (x) 1 + depth(n) (x) x^2 - delta_c n (x) 1
            + i eta (a^dag - a) (x) 1
    The cos2 option keeps the full cosine-mode well instead of its quadratic
    expansion, realized with the well centered on the particle basis via
    sin^2 = 1 - cos^2; the photon-linear part of the constant offset is what
    the detuning redefinition absorbs, so delta_c keeps one meaning for both
    options (recorded in the metadata).
    """
    basis = make_particle_basis(params, opts)
    n_fock = opts.trunc.n_fock
    a, a_dag, num = fock_ops(n_fock)
    scales = DerivedScales(params)
    depth = np.diag(scales.potential_depth(np.arange(n_fock)).astype(complex))
    eye_f = np.eye(n_fock, dtype=complex)
    eye_p = np.eye(basis.dim, dtype=complex)

    if opts.potential == "harmonic":
        well = basis.x2.astype(complex)
    else:
        well = (np.eye(basis.dim) - basis.cos2).astype(complex)

    h = (
        params.omega_rec * np.kron(eye_f, basis.p2.astype(complex))
        + np.kron(depth, well)
        - params.delta_c * np.kron(num.mat, eye_p)
        + 1j * params.eta * np.kron(a_dag.mat - a.mat, eye_p)
    )
    meta = {
        "potential": opts.potential,
        "parity": opts.parity,
        "n_fock": n_fock,
        "m_levels": opts.trunc.m_levels,
        "xi_ref": basis.xi_ref,
        "particle_indices": basis.indices,
        "detuning_convention": (
            "single-photon light shift absorbed into delta_c; cosine-mode well "
            "realized as 1 - cos^2(x) so its minimum sits at the basis center "
            "and c-number offsets drop out"
        ),
    }
    return Operator(_hermitize(h), "product", (n_fock, basis.dim), meta)


def build_liouvillean_jump(params: SystemParams, opts: ModelOptions) -> tuple[Operator, Operator]:
    """Photon-loss jump operator and the decay operator paired with it.

    ``jump = sqrt(2 kappa) a (x) 1``; the anti-Hermitian part ``-i * decay``
    with ``decay = kappa n (x) 1`` is what gets added to the Hamiltonian for
    stochastic wave-function evolution.
    """
    basis_dim = make_particle_basis(params, opts).dim
    a, _, num = fock_ops(opts.trunc.n_fock)
    eye_p = Operator(np.eye(basis_dim, dtype=complex), "particle")
    jump = np.sqrt(2.0 * params.kappa) * tensor(a, eye_p)
    decay = params.kappa * tensor(num, eye_p)
    return jump, decay


def build_effective_hamiltonian(params: SystemParams, m: int, n_fock: int) -> Operator:
    """Field-only Hamiltonian conditioned on the particle vibrational level m.

    The particle's zero-point motion turns the optical potential into a
    square-root function of the photon number, nonlinear to all orders:
        H_m = sqrt(omega_rec * depth(n)) (2m + 1) - delta_c n + i eta (a^dag - a)
    """
    if m < 0:
        raise ConfigurationError(f"vibrational index must be >= 0, got {m}")
    a, a_dag, num = fock_ops(n_fock)
    scales = DerivedScales(params)
    n = np.arange(n_fock, dtype=float)
    nonlinear = np.sqrt(params.omega_rec * scales.potential_depth(n)) * (2 * m + 1)
    h = (
        np.diag(nonlinear.astype(complex))
        - params.delta_c * num.mat
        + 1j * params.eta * (a_dag.mat - a.mat)
    )
    return Operator(_hermitize(h), "field", meta={"m": m})


def resonance_detuning(params: SystemParams, m: int, expand_at: float = 0.0) -> float:
    """Detuning that cancels the photon-linear part of the conditional Hamiltonian.

    First-order Taylor coefficient of sqrt(omega_rec * depth(n)) * (2m+1)
    about ``expand_at`` (default n = 0).
    """
    scales = DerivedScales(params)
    depth = float(scales.potential_depth(expand_at))
    if depth <= 0:
        raise ConfigurationError("resonance detuning singular: potential depth vanishes")
    return (2 * m + 1) * params.omega_rec * abs(params.u0) / (2.0 * np.sqrt(params.omega_rec * depth))


def self_consistent_resonance(params: SystemParams, m: int, n_fock: int = 32,
                              start: float | None = None, damping: float = 0.5,
                              tol: float = 1e-8, max_iter: int = 200):
    """Resonance detuning with the expansion point iterated to the working point.

    The photon-linear cancellation of ``resonance_detuning`` depends on the
    expansion photon number; here it is driven to self-consistency with the
    mean photon number of the resulting conditional steady state, which keeps
    the pump resonant at the actual operating point for every level m.
    Returns (delta_c, mean_photon_number).
    """
    from .liouville import assemble, steady_state

    if start is None:
        start = abs(params.eta / params.kappa) ** 2 if params.kappa > 0 else 0.0
    nbar = float(start)
    dc = resonance_detuning(params, m, expand_at=nbar)
    for _ in range(max_iter):
        dc = resonance_detuning(params, m, expand_at=nbar)
        probe = replace(params, delta_c=dc)
        rho = steady_state(assemble(build_effective_hamiltonian(probe, m, n_fock),
                                    probe.kappa))
        mean = float(np.sum(np.arange(n_fock) * np.diag(rho.mat).real))
        if abs(mean - nbar) < tol:
            return dc, mean
        nbar = (1.0 - damping) * nbar + damping * mean
    raise ConfigurationError(
        f"self-consistent resonance for m={m} did not settle in {max_iter} iterations")


def embed_oscillator_state(m: int, xi: float, basis: ParticleBasis):
    """Expansion of |m, xi> in the retained reference basis.

    Returns (coefficients, residual) where the residual is the norm lost to
    the truncation (and to parity restriction, when m has the wrong parity).
    """
    from .hilbert import ho_overlap_matrix

    top = max(basis.indices) + 1
    col = ho_overlap_matrix(top, m + 1, basis.xi_ref, xi)[:, m]
    coeffs = col[list(basis.indices)].astype(complex)
    residual = float(max(0.0, 1.0 - np.sum(np.abs(coeffs) ** 2)))
    return coeffs, residual
