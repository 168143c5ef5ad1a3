"""Figure-level quantities: Wigner functions, squeezing, negativity, photon stats.

Quadrature conventions used throughout: X1 = (a + a^dag)/2 and
X2 = (a - a^dag)/(2i), so the vacuum has variance 1/4 in each and a coherent
state |alpha> sits at (Re alpha, Im alpha) in the Wigner plane.  Covariances
are vacuum-normalized (multiplied by 4) before eigenvalues are taken, which
makes the squeezing measure -log(lambda_s) vanish exactly on coherent states.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .hilbert import DensityMatrix, QuantumState, UsageError, partial_trace


@dataclass(frozen=True)
class WignerGrid:
    """Wigner function sampled on a rectangular quadrature grid.

    ``values[i, j]`` is W(x_axis[i], p_axis[j]); the Riemann sum over the
    grid approximates 1 when the grid covers the state's support.
    """

    x_axis: np.ndarray
    p_axis: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def integral(self) -> float:
        dx = self.x_axis[1] - self.x_axis[0]
        dp = self.p_axis[1] - self.p_axis[0]
        return float(self.values.sum() * dx * dp)


@dataclass(frozen=True)
class SqueezingReport:
    """Vacuum-normalized quadrature covariance and the derived squeezing measure."""

    covariance: np.ndarray  # 2x2, vacuum -> identity
    lambda_s: float
    measure: float


def _field_moments(rho: np.ndarray):
    n = rho.shape[0]
    a = np.diag(np.sqrt(np.arange(1, n)), k=1)
    mean_a = np.trace(rho @ a)
    mean_a2 = np.trace(rho @ (a @ a))
    mean_n = np.trace(rho @ (a.conj().T @ a)).real
    return mean_a, mean_a2, mean_n


def wigner(rho_field: DensityMatrix, x_axis, p_axis) -> WignerGrid:
    """Wigner function by the displaced-parity formula W = (2/pi) <D(2a) Pi>.

    Displacement matrix elements are evaluated in closed form (generalized
    Laguerre functions), which is the unbounded-padding limit of the parity
    trace; per-point error is set by the state's own truncation only.  A
    warning flag lands in the metadata when the grid covers less than five
    standard deviations of the state, or when the state carries weight near
    its own Fock cutoff.
    """
    if rho_field.space != "field":
        raise UsageError("wigner expects a field-space density matrix")
    x_axis = np.asarray(x_axis, dtype=float)
    p_axis = np.asarray(p_axis, dtype=float)
    n = rho_field.dim
    beta = 2.0 * (x_axis[:, None] + 1j * p_axis[None, :])
    b2 = np.abs(beta) ** 2
    log_fact = gammaln(np.arange(n + 1.0) + 1.0)
    acc = np.zeros(beta.shape, dtype=complex)
    beta_pow = np.ones_like(beta)
    for off in range(n):
        diag = np.diag(rho_field.mat, off)
        if off > 0:
            beta_pow = beta_pow * beta
        # parity-signed prefactors sqrt(k!/(k+off)!) * (-1)^k, folded per k
        lk_m1 = np.zeros_like(b2)
        lk = np.ones_like(b2)
        for k in range(n - off):
            pref = (-1.0) ** k * np.exp(0.5 * (log_fact[k] - log_fact[k + off]))
            if off == 0:
                acc += pref * diag[k].real * lk
            else:
                acc += pref * (diag[k] * beta_pow).real * 2.0 * lk
            lk_m1, lk = lk, ((2 * k + 1 + off - b2) * lk - (k + off) * lk_m1) / (k + 1)
    vals = (2.0 / np.pi) * np.exp(-0.5 * b2) * acc.real

    mean_a, _, _ = _field_moments(rho_field.mat)
    var_x, var_p = _quadrature_variances(rho_field.mat)
    cover_x = (x_axis.min() <= mean_a.real - 5 * np.sqrt(var_x)
               and x_axis.max() >= mean_a.real + 5 * np.sqrt(var_x))
    cover_p = (p_axis.min() <= mean_a.imag - 5 * np.sqrt(var_p)
               and p_axis.max() >= mean_a.imag + 5 * np.sqrt(var_p))
    tail = float(np.trace(rho_field.mat).real
                 - np.trace(rho_field.mat[: max(1, n - max(1, n // 10)),
                                          : max(1, n - max(1, n // 10))]).real)
    meta = {
        "grid_covers_support": bool(cover_x and cover_p),
        "state_tail_mass": tail,
        "quadrature_convention": "x = Re<a>, p = Im<a>, vacuum variance 1/4",
    }
    return WignerGrid(x_axis=x_axis, p_axis=p_axis, values=vals, meta=meta)


def default_wigner_axes(rho_field: DensityMatrix, points: int = 81,
                        n_sigma: float = 6.0):
    """Symmetric axes covering the state's mean +- n_sigma quadrature widths."""
    mean_a, _, _ = _field_moments(rho_field.mat)
    var_x, var_p = _quadrature_variances(rho_field.mat)
    hx = n_sigma * np.sqrt(var_x)
    hp = n_sigma * np.sqrt(var_p)
    x = np.linspace(mean_a.real - hx, mean_a.real + hx, points)
    p = np.linspace(mean_a.imag - hp, mean_a.imag + hp, points)
    return x, p


def _quadrature_variances(rho: np.ndarray):
    mean_a, mean_a2, mean_n = _field_moments(rho)
    var_x = (2 * mean_a2.real + 2 * mean_n + 1) / 4 - mean_a.real ** 2
    var_p = (-2 * mean_a2.real + 2 * mean_n + 1) / 4 - mean_a.imag ** 2
    return var_x, var_p


def squeezing(rho_field: DensityMatrix) -> SqueezingReport:
    """Smaller eigenvalue of the vacuum-normalized quadrature covariance matrix."""
    if rho_field.space != "field":
        raise UsageError("squeezing expects a field-space density matrix")
    mean_a, mean_a2, mean_n = _field_moments(rho_field.mat)
    var_x = (2 * mean_a2.real + 2 * mean_n + 1) / 4 - mean_a.real ** 2
    var_p = (-2 * mean_a2.real + 2 * mean_n + 1) / 4 - mean_a.imag ** 2
    cov_xp = mean_a2.imag / 2 - mean_a.real * mean_a.imag
    cov = 4.0 * np.array([[var_x, cov_xp], [cov_xp, var_p]])
    lam = np.linalg.eigvalsh(cov)
    lambda_s = float(lam[0])
    return SqueezingReport(covariance=cov, lambda_s=lambda_s,
                           measure=float(-np.log(lambda_s)))


def negativity(rho: DensityMatrix) -> float:
    """Absolute sum of negative eigenvalues of the field partial transpose."""
    if rho.space != "product" or rho.dims is None:
        raise UsageError("negativity needs a product-space density matrix with dims")
    nf, npart = rho.dims
    r = rho.mat.reshape(nf, npart, nf, npart)
    pt = r.transpose(2, 1, 0, 3).reshape(nf * npart, nf * npart)
    pt = 0.5 * (pt + pt.conj().T)
    vals = np.linalg.eigvalsh(pt)
    return float(-vals[vals < 0].sum())


def field_reduced(state) -> DensityMatrix:
    """Reduced field density matrix of a product-space pure or mixed state."""
    if isinstance(state, QuantumState):
        state = state.density_matrix()
    return partial_trace(state, keep="field")


def photon_stats(rho_field: DensityMatrix) -> tuple[float, float]:
    """Mean and variance of the photon number."""
    diag = np.diag(rho_field.mat).real
    n = np.arange(diag.size)
    mean = float(np.sum(n * diag))
    return mean, float(np.sum(n * n * diag) - mean ** 2)


def coherent_fit_fidelity(rho_field: DensityMatrix) -> float:
    """Fidelity <alpha|rho|alpha> against the coherent state with alpha = <a>."""
    from .hilbert import coherent_amplitudes

    mean_a, _, _ = _field_moments(rho_field.mat)
    amps = coherent_amplitudes(complex(mean_a), rho_field.dim)
    amps = amps / np.linalg.norm(amps)
    return float(np.real(np.vdot(amps, rho_field.mat @ amps)))
