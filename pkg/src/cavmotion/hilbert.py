"""Operators and states on truncated Fock and harmonic-oscillator bases.

Everything here is plain dense numpy under a thin wrapper that tracks which
space a matrix or vector lives on (``field``, ``particle`` or their tensor
``product``).  All constructors return immutable values that are safe to
share between concurrent trajectory workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SPACES = ("field", "particle", "product")


class ConfigurationError(ValueError):
    """Raised when a truncation or physical parameter is unusable."""


class UsageError(ValueError):
    """Raised on mismatched spaces or dimensions."""


def _check_space(space: str) -> None:
    if space not in SPACES:
        raise UsageError(f"unknown space tag {space!r}, expected one of {SPACES}")


@dataclass(frozen=True)
class Operator:
    """Square matrix acting on one of the tagged Hilbert spaces.

    ``dims`` holds the (field_dim, particle_dim) factor sizes for operators
    on the product space and is ``None`` otherwise.
    """

    mat: np.ndarray
    space: str
    dims: tuple[int, int] | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        _check_space(self.space)
        m = np.asarray(self.mat)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise UsageError(f"operator matrix must be square, got shape {m.shape}")
        if self.space == "product":
            if self.dims is None:
                raise UsageError("product-space operator needs factor dims")
            if self.dims[0] * self.dims[1] != m.shape[0]:
                raise UsageError("factor dims do not multiply to matrix size")
        object.__setattr__(self, "mat", m)
        self.mat.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def dag(self) -> "Operator":
        return Operator(self.mat.conj().T.copy(), self.space, self.dims)

    def __add__(self, other: "Operator") -> "Operator":
        self._compat(other)
        return Operator(self.mat + other.mat, self.space, self.dims)

    def __sub__(self, other: "Operator") -> "Operator":
        self._compat(other)
        return Operator(self.mat - other.mat, self.space, self.dims)

    def __mul__(self, scalar) -> "Operator":
        return Operator(self.mat * scalar, self.space, self.dims)

    __rmul__ = __mul__

    def __matmul__(self, other: "Operator") -> "Operator":
        self._compat(other)
        return Operator(self.mat @ other.mat, self.space, self.dims)

    def _compat(self, other: "Operator") -> None:
        if not isinstance(other, Operator):
            raise UsageError("expected an Operator")
        if other.space != self.space or other.dim != self.dim:
            raise UsageError(
                f"operator mismatch: {self.space}/{self.dim} vs {other.space}/{other.dim}"
            )


@dataclass(frozen=True)
class QuantumState:
    """Pure state vector on a tagged space."""

    vec: np.ndarray
    space: str
    dims: tuple[int, int] | None = None

    def __post_init__(self):
        _check_space(self.space)
        v = np.asarray(self.vec, dtype=complex)
        if v.ndim != 1:
            raise UsageError("state amplitudes must be a 1-d vector")
        if self.space == "product":
            if self.dims is None or self.dims[0] * self.dims[1] != v.size:
                raise UsageError("product-space state needs consistent factor dims")
        object.__setattr__(self, "vec", v)
        self.vec.setflags(write=False)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.vec))

    def normalized(self) -> "QuantumState":
        n = self.norm
        if n == 0.0:
            raise UsageError("cannot normalize the zero vector")
        return QuantumState(self.vec / n, self.space, self.dims)

    def overlap(self, other: "QuantumState") -> complex:
        if other.space != self.space or other.vec.size != self.vec.size:
            raise UsageError("states live on different spaces")
        return complex(np.vdot(self.vec, other.vec))

    def density_matrix(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.vec, self.vec.conj()), self.space, self.dims)


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite matrix on a tagged space."""

    mat: np.ndarray
    space: str
    dims: tuple[int, int] | None = None

    def __post_init__(self):
        _check_space(self.space)
        m = np.asarray(self.mat, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise UsageError("density matrix must be square")
        if self.space == "product":
            if self.dims is None or self.dims[0] * self.dims[1] != m.shape[0]:
                raise UsageError("product-space density matrix needs factor dims")
        object.__setattr__(self, "mat", m)
        self.mat.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.mat).real)

    def validate(self, herm_tol=1e-12, trace_tol=1e-10, eig_floor=-1e-10) -> None:
        """Check hermiticity, unit trace and positivity at the stated tolerances."""
        scale = max(1.0, float(np.abs(self.mat).max()))
        if np.abs(self.mat - self.mat.conj().T).max() > herm_tol * scale:
            raise UsageError("density matrix is not Hermitian")
        if abs(self.trace - 1.0) > trace_tol:
            raise UsageError(f"density matrix trace {self.trace} is not 1")
        if np.linalg.eigvalsh(self.mat).min() < eig_floor:
            raise UsageError("density matrix has a significantly negative eigenvalue")

    def purity(self) -> float:
        return float(np.trace(self.mat @ self.mat).real)


# ---------------------------------------------------------------------------
# field-space constructors


def fock_ops(n_fock: int) -> tuple[Operator, Operator, Operator]:
    """Truncated annihilation, creation and number operators.

    ``a|n> = sqrt(n)|n-1>`` on the first ``n_fock`` Fock states; the creation
    operator is the exact conjugate transpose of ``a``.
    """
    if n_fock < 2:
        raise ConfigurationError(f"n_fock must be >= 2, got {n_fock}")
    a = np.diag(np.sqrt(np.arange(1, n_fock, dtype=float)), k=1).astype(complex)
    a_op = Operator(a, "field")
    num = np.diag(np.arange(n_fock, dtype=float)).astype(complex)
    return a_op, a_op.dag(), Operator(num, "field")


def fock_state(n: int, n_fock: int, space: str = "field") -> QuantumState:
    if not 0 <= n < n_fock:
        raise ConfigurationError(f"Fock index {n} outside truncation {n_fock}")
    v = np.zeros(n_fock, dtype=complex)
    v[n] = 1.0
    return QuantumState(v, space)


def coherent_amplitudes(alpha: complex, n_fock: int) -> np.ndarray:
    """Fock amplitudes of |alpha> truncated at ``n_fock`` (not renormalized)."""
    c = np.empty(n_fock, dtype=complex)
    c[0] = np.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, n_fock):
        c[n] = c[n - 1] * alpha / np.sqrt(n)
    return c


def coherent_state(alpha: complex, n_fock: int, tail_tol: float | None = None,
                   space: str = "field") -> QuantumState:
    """Truncated coherent state, renormalized on the truncated basis.

    With ``tail_tol`` set, the probability mass lost to truncation must stay
    below it, otherwise a larger ``n_fock`` is demanded.
    """
    c = coherent_amplitudes(alpha, n_fock)
    tail = 1.0 - float(np.vdot(c, c).real)
    if tail_tol is not None and tail > tail_tol:
        raise ConfigurationError(
            f"coherent state |alpha|^2={abs(alpha)**2:.3g} leaks {tail:.2e} beyond "
            f"n_fock={n_fock}; increase the Fock cutoff"
        )
    return QuantumState(c / np.linalg.norm(c), space)


# ---------------------------------------------------------------------------
# harmonic-oscillator particle basis


def lowering(n_levels: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n_levels, dtype=float)), k=1).astype(complex)


def ho_ops(m_levels: int, xi: float) -> tuple[Operator, Operator]:
    """Dimensionless position and momentum on an oscillator basis of length xi.

    Conventions: position in units 1/K, momentum in units hbar*K, so that
    [x, p] = i away from the truncation edge.
    """
    if m_levels < 2:
        raise ConfigurationError(f"m_levels must be >= 2, got {m_levels}")
    if xi <= 0:
        raise ConfigurationError(f"oscillator length must be positive, got {xi}")
    c = lowering(m_levels)
    x = (xi / np.sqrt(2.0)) * (c + c.conj().T)
    p = (1j / (np.sqrt(2.0) * xi)) * (c.conj().T - c)
    return Operator(x, "particle"), Operator(p, "particle")


def ho_overlap_matrix(m_rows: int, m_cols: int, xi: float, xi_prime: float) -> np.ndarray:
    """Overlaps T[i, j] = <i, xi | j, xi_prime> of same-center oscillator eigenstates.

    Computed by a stable two-term recurrence in the length ratio; exact
    orthonormality for equal lengths.  Entries vanish between opposite
    parities.
    """
    if xi <= 0 or xi_prime <= 0:
        raise ConfigurationError("oscillator lengths must be positive")
    if m_rows < 1 or m_cols < 1:
        raise ConfigurationError("need at least one basis level per side")
    r = xi_prime / xi
    mu = 0.5 * (r + 1.0 / r)
    nu = 0.5 * (r - 1.0 / r)
    T = np.zeros((m_rows, m_cols))
    T[0, 0] = 1.0 / np.sqrt(mu)
    # first row from <0,xi| a^dag |j,xi'> = 0 with a = mu*b + nu*b^dag
    for j in range(1, m_cols):
        if j >= 2:
            T[0, j] = -(nu / mu) * np.sqrt((j - 1) / j) * T[0, j - 2]
    # remaining rows from <i,xi| b |j,xi'> with b = mu*a - nu*a^dag
    for i in range(m_rows - 1):
        for j in range(m_cols):
            acc = nu * np.sqrt(i) * T[i - 1, j] if i >= 1 else 0.0
            if j >= 1:
                acc += np.sqrt(j) * T[i, j - 1]
            T[i + 1, j] = acc / (mu * np.sqrt(i + 1))
    return T


def ho_overlap(m: int, xi: float, m_prime: int, xi_prime: float) -> float:
    """Single overlap <m, xi | m_prime, xi_prime>."""
    if m < 0 or m_prime < 0:
        raise ConfigurationError("oscillator indices must be non-negative")
    return float(ho_overlap_matrix(m + 1, m_prime + 1, xi, xi_prime)[m, m_prime])


def oscillator_eigenfunctions(m_max: int, xi: float, x: np.ndarray) -> np.ndarray:
    """Values of the first ``m_max`` normalized eigenfunctions on grid ``x``.

    Stable recurrence with the Gaussian folded in, usable up to large m
    without overflow.  Returns an array of shape (m_max, len(x)).
    """
    x = np.asarray(x, dtype=float)
    u = x / xi
    out = np.empty((m_max, x.size))
    out[0] = np.pi ** -0.25 / np.sqrt(xi) * np.exp(-0.5 * u * u)
    if m_max > 1:
        out[1] = np.sqrt(2.0) * u * out[0]
    for m in range(1, m_max - 1):
        out[m + 1] = np.sqrt(2.0 / (m + 1)) * u * out[m] - np.sqrt(m / (m + 1)) * out[m - 1]
    return out


# ---------------------------------------------------------------------------
# composite-space plumbing


def tensor(a: Operator, b: Operator) -> Operator:
    """Kronecker product field (x) particle, field as the slow index."""
    if a.space != "field" or b.space != "particle":
        raise UsageError(
            f"tensor expects (field, particle) operators, got ({a.space}, {b.space})"
        )
    return Operator(np.kron(a.mat, b.mat), "product", (a.dim, b.dim))


def product_state(field: QuantumState, particle: QuantumState) -> QuantumState:
    if field.space != "field" or particle.space != "particle":
        raise UsageError("product_state expects a field and a particle state")
    return QuantumState(np.kron(field.vec, particle.vec), "product",
                        (field.vec.size, particle.vec.size))


def partial_trace(rho: DensityMatrix, keep: str) -> DensityMatrix:
    """Trace out one factor of a product-space density matrix."""
    if rho.space != "product" or rho.dims is None:
        raise UsageError("partial_trace needs a product-space density matrix with dims")
    nf, npart = rho.dims
    r = rho.mat.reshape(nf, npart, nf, npart)
    if keep == "field":
        return DensityMatrix(np.einsum("imjm->ij", r), "field")
    if keep == "particle":
        return DensityMatrix(np.einsum("nink->ik", r), "particle")
    raise UsageError(f"keep must be 'field' or 'particle', got {keep!r}")


def orthonormalize(vectors: list[QuantumState], tol: float = 1e-10) -> list[QuantumState]:
    """Orthonormal basis of the span, by modified Gram-Schmidt.

    Vectors whose residual norm after projecting out the basis built so far
    falls below ``tol`` are dropped.  A second projection pass keeps the Gram
    matrix at identity to ~1e-14 even for nearly dependent inputs.
    """
    if not vectors:
        return []
    space = vectors[0].space
    dims = vectors[0].dims
    size = vectors[0].vec.size
    basis: list[np.ndarray] = []
    for v in vectors:
        if v.space != space or v.vec.size != size:
            raise UsageError("all vectors must share one space and dimension")
        w = v.vec.copy()
        for _ in range(2):
            for u in basis:
                w -= np.vdot(u, w) * u
        nrm = np.linalg.norm(w)
        if nrm > tol:
            basis.append(w / nrm)
    return [QuantumState(u, space, dims) for u in basis]
