"""Stochastic wave-function (quantum-jump) integrator and ensemble runner.

A trajectory evolves under the non-Hermitian generator (Hamiltonian plus
``-i * decay``) with an embedded adaptive Runge-Kutta pair; the squared norm
decays monotonically between jumps, and whenever it crosses a uniformly
drawn threshold the jump operator is applied and the state renormalized.
Jump times are localized by bisection inside the crossing step.

Trajectories are deterministic functions of (seed, grid, tolerances), and
ensembles reduce per-trajectory results in index order, so reruns are
bit-identical regardless of worker count.
"""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from numba import njit

from .hilbert import DensityMatrix, Operator, QuantumState, UsageError


class IntegrationError(RuntimeError):
    """Step-size underflow or norm underflow that refinement could not fix."""


class EnsembleError(RuntimeError):
    """A trajectory failed; carries the trajectory index in the message."""


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.zeros((7, 7))
_A[1, 0] = 1 / 5
_A[2, :2] = (3 / 40, 9 / 40)
_A[3, :3] = (44 / 45, -56 / 15, 32 / 9)
_A[4, :4] = (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729)
_A[5, :5] = (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656)
_A[6, :6] = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)
_B = _A[6].copy()  # 5th-order weights (FSAL)
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])

_STATUS_DONE = 0
_STATUS_CROSSED = 1
_STATUS_UNDERFLOW = 2


@njit(cache=True)
def _matvec(indptr, indices, data, v, out):
    n = v.size
    for i in range(n):
        acc = 0.0 + 0.0j
        for k in range(indptr[i], indptr[i + 1]):
            acc += data[k] * v[indices[k]]
        out[i] = acc


@njit(cache=True)
def _norm2(v):
    s = 0.0
    for i in range(v.size):
        s += v[i].real * v[i].real + v[i].imag * v[i].imag
    return s


@njit(cache=True)
def _rk_step(indptr, indices, data, a_tab, b_tab, e_tab, y, k1, h, y_out, k_stages, work):
    """One Dormand-Prince step of size h from y, with k1 = f(y) supplied.

    Fills y_out and k_stages (7 x n); returns the raw error vector in work.
    """
    n = y.size
    for i in range(n):
        k_stages[0, i] = k1[i]
    for s in range(1, 7):
        for i in range(n):
            acc = 0.0 + 0.0j
            for j in range(s):
                aa = a_tab[s, j]
                if aa != 0.0:
                    acc += aa * k_stages[j, i]
            work[i] = y[i] + h * acc
        _matvec(indptr, indices, data, work, k_stages[s])
    for i in range(n):
        acc = 0.0 + 0.0j
        for j in range(6):
            bb = b_tab[j]
            if bb != 0.0:
                acc += bb * k_stages[j, i]
        y_out[i] = y[i] + h * acc
    for i in range(n):
        acc = 0.0 + 0.0j
        for j in range(7):
            ee = e_tab[j]
            if ee != 0.0:
                acc += ee * k_stages[j, i]
        work[i] = h * acc
    return


@njit(cache=True)
def _error_norm(err, y, y_new, rtol, atol):
    s = 0.0
    n = y.size
    for i in range(n):
        sc = atol + rtol * max(abs(y[i]), abs(y_new[i]))
        q = abs(err[i]) / sc
        s += q * q
    return np.sqrt(s / n)


@njit(cache=True)
def _integrate_segment(indptr, indices, data, a_tab, b_tab, e_tab, psi, t0, t1,
                       h0, threshold, rtol, atol, bisect_iters):
    """Advance psi from t0 toward t1 under dpsi/dt = A psi.

    Returns (status, t_reached, h_next).  On a threshold crossing psi holds
    the (unnormalized) state at the crossing time; on completion psi holds
    the state at t1.
    """
    n = psi.size
    k1 = np.empty(n, dtype=np.complex128)
    y_new = np.empty(n, dtype=np.complex128)
    k_stages = np.empty((7, n), dtype=np.complex128)
    work = np.empty(n, dtype=np.complex128)
    span = t1 - t0
    if span <= 0.0:
        return _STATUS_DONE, t1, h0
    t = t0
    h = min(h0, span)
    _matvec(indptr, indices, data, psi, k1)
    while t < t1:
        if h < 1e-15 * max(abs(t1), 1.0):
            return _STATUS_UNDERFLOW, t, h
        if t + h > t1:
            h = t1 - t
        _rk_step(indptr, indices, data, a_tab, b_tab, e_tab, psi, k1, h, y_new, k_stages, work)
        err = _error_norm(work, psi, y_new, rtol, atol)
        if err > 1.0:
            h *= max(0.2, 0.9 * err ** -0.2)
            continue
        nn = _norm2(y_new)
        if threshold >= 0.0 and nn < threshold:
            # jump inside this step: bisect on the monotone squared norm
            lo = 0.0
            hi = 1.0
            for _ in range(bisect_iters):
                mid = 0.5 * (lo + hi)
                _rk_step(indptr, indices, data, a_tab, b_tab, e_tab, psi, k1,
                         h * mid, y_new, k_stages, work)
                if _norm2(y_new) < threshold:
                    hi = mid
                else:
                    lo = mid
            _rk_step(indptr, indices, data, a_tab, b_tab, e_tab, psi, k1,
                     h * hi, y_new, k_stages, work)
            for i in range(n):
                psi[i] = y_new[i]
            return _STATUS_CROSSED, t + h * hi, h
        t += h
        for i in range(n):
            psi[i] = y_new[i]
            k1[i] = k_stages[6, i]  # FSAL
        if nn < 1e-14:
            return _STATUS_UNDERFLOW, t, h
        if err > 1e-30:
            h *= min(5.0, 0.9 * err ** -0.2)
        else:
            h *= 5.0
    return _STATUS_DONE, t1, h


@dataclass(frozen=True)
class TrajectoryRecord:
    """One stochastic trajectory: sampled observables, jumps, final state."""

    seed: int
    times: np.ndarray
    observables: dict
    jump_times: np.ndarray
    final_state: QuantumState
    norm2: np.ndarray
    snapshots: tuple | None = None  # (density_times, array n_times x dim)


@dataclass(frozen=True)
class EnsembleResult:
    n_traj: int
    times: np.ndarray
    means: dict
    stderrs: dict
    jump_counts: np.ndarray
    density_times: np.ndarray | None = None
    averaged_density: list | None = None


class ProjectorObservable:
    """<psi| P |psi> for the projector onto the span of orthonormal vectors."""

    def __init__(self, vectors: np.ndarray):
        self.vectors = np.atleast_2d(np.asarray(vectors, dtype=complex))

    def __call__(self, psi: np.ndarray) -> float:
        amps = self.vectors.conj() @ psi
        return float(np.real(np.vdot(amps, amps)))


def _eval_observable(obs, psi: np.ndarray) -> float:
    if isinstance(obs, Operator):
        return float(np.real(np.vdot(psi, obs.mat @ psi)))
    return float(obs(psi))


def derive_seed(master_seed: int, index: int) -> int:
    """Deterministic per-trajectory seed, independent of scheduling order."""
    ss = np.random.SeedSequence((int(master_seed), int(index)))
    return int(ss.generate_state(1, np.uint64)[0])


def _draw_threshold(rng) -> float:
    # guard against pathological ~0 thresholds that would force the norm
    # below the representable decay range before jumping
    r = rng.random()
    while r < 1e-15:
        r = rng.random()
    return r


def evolve_trajectory(h: Operator, jump: Operator | None, psi0: QuantumState,
                      times, seed: int, observables: dict | None = None,
                      rtol: float = 1e-8, atol: float = 1e-12,
                      density_times=None) -> TrajectoryRecord:
    """Single quantum-jump trajectory under the non-Hermitian generator ``h``.

    ``h`` must already contain the anti-Hermitian loss term (``-i kappa n``
    for single-channel photon decay).  Observables are evaluated on the
    normalized state at every grid time; ``density_times`` optionally records
    normalized state snapshots for ensemble density-matrix averaging.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 1 or np.any(np.diff(times) <= 0):
        raise UsageError("times must be a strictly increasing 1-d grid")
    if abs(psi0.norm - 1.0) > 1e-10:
        raise UsageError("initial state must be normalized")
    if jump is not None and (jump.space != h.space or jump.dim != h.dim):
        raise UsageError("jump operator lives on a different space than h")

    observables = observables or {}
    a_csr = sp.csr_matrix(-1j * h.mat)
    indptr = a_csr.indptr.astype(np.int64)
    indices = a_csr.indices.astype(np.int64)
    data = np.ascontiguousarray(a_csr.data, dtype=np.complex128)

    jump_mat = None
    if jump is not None and np.abs(jump.mat).max() > 0.0:
        jump_mat = sp.csr_matrix(jump.mat)

    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))
    threshold = _draw_threshold(rng) if jump_mat is not None else -1.0

    if density_times is not None:
        density_times = np.asarray(density_times, dtype=float)
        extra = density_times[~np.isin(density_times, times)]
        event_times = np.unique(np.concatenate([times, extra]))
        snap = np.empty((density_times.size, psi0.vec.size), dtype=complex)
    else:
        event_times = times
        snap = None

    psi = psi0.vec.copy()
    obs_series = {name: np.empty(times.size) for name in observables}
    norm2_series = np.empty(times.size)
    jump_times: list[float] = []
    t_cur = float(event_times[0])
    if not np.isclose(t_cur, times[0]) and t_cur > times[0]:
        raise UsageError("density_times must not precede the observable grid")
    h_guess = _initial_step(data, indptr, indices, psi, rtol)

    def record(t_event):
        nn = _norm2(psi)
        psi_n = psi / np.sqrt(nn)
        idx = np.searchsorted(times, t_event)
        if idx < times.size and np.isclose(times[idx], t_event):
            norm2_series[idx] = nn
            for name, ob in observables.items():
                obs_series[name][idx] = _eval_observable(ob, psi_n)
        if snap is not None:
            jdx = np.searchsorted(density_times, t_event)
            if jdx < density_times.size and np.isclose(density_times[jdx], t_event):
                snap[jdx] = psi_n

    record(t_cur)
    for t_next in event_times[1:]:
        t = t_cur
        while True:
            status, t_reached, h_guess = _integrate_segment(
                indptr, indices, data, _A, _B, _E, psi, t, float(t_next),
                h_guess, threshold, rtol, atol, 24)
            if status == _STATUS_DONE:
                break
            if status == _STATUS_CROSSED:
                after = jump_mat @ psi
                nrm = np.linalg.norm(after)
                if nrm == 0.0:
                    raise IntegrationError(
                        f"jump operator annihilated the state at t={t_reached}")
                psi = np.ascontiguousarray(after / nrm)
                jump_times.append(float(t_reached))
                threshold = _draw_threshold(rng)
                t = t_reached
                continue
            # one refinement attempt at tighter tolerance, then hard error
            status, t_reached, h_guess = _integrate_segment(
                indptr, indices, data, _A, _B, _E, psi, t_reached, float(t_next),
                max(h_guess * 0.1, 1e-16), threshold, rtol * 0.1, atol * 0.1, 24)
            if status == _STATUS_UNDERFLOW:
                raise IntegrationError(
                    f"norm or step size underflow near t={t_reached}")
            if status == _STATUS_DONE:
                break
            t = t_reached
        t_cur = float(t_next)
        record(t_cur)

    nn = np.sqrt(_norm2(psi))
    final = QuantumState(psi / nn, h.space, h.dims)
    return TrajectoryRecord(
        seed=int(seed), times=times, observables=obs_series,
        jump_times=np.asarray(jump_times), final_state=final, norm2=norm2_series,
        snapshots=(density_times, snap) if snap is not None else None)


def _initial_step(data, indptr, indices, psi, rtol) -> float:
    out = np.empty_like(psi)
    _matvec(indptr, indices, data, psi, out)
    rate = np.linalg.norm(out) / max(np.linalg.norm(psi), 1e-300)
    return float((rtol ** 0.2) / max(rate, 1e-12))


def _run_one(args):
    (h, jump, psi0, times, seed, observables, rtol, atol, density_times) = args
    return evolve_trajectory(h, jump, psi0, times, seed, observables,
                             rtol, atol, density_times)


def run_ensemble(h: Operator, jump: Operator | None, psi0: QuantumState, times,
                 n_traj: int, master_seed: int, observables: dict | None = None,
                 density_times=None, workers: int = 1, rtol: float = 1e-8,
                 atol: float = 1e-12) -> EnsembleResult:
    """Seeded trajectory ensemble with index-ordered, order-independent reduction.

    Trajectory ``i`` is seeded from ``(master_seed, i)``; reruns are
    bit-identical for any worker count.  With ``density_times`` set, the
    ensemble-averaged density matrix is accumulated at those times.
    """
    if n_traj < 1:
        raise UsageError("n_traj must be >= 1")
    observables = observables or {}
    times = np.asarray(times, dtype=float)
    argsets = [(h, jump, psi0, times, derive_seed(master_seed, i), observables,
                rtol, atol, density_times) for i in range(n_traj)]

    records: list[TrajectoryRecord | None] = [None] * n_traj
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_run_one, a): i for i, a in enumerate(argsets)}
            for fut in concurrent.futures.as_completed(futures):
                i = futures[fut]
                try:
                    records[i] = fut.result()
                except Exception as exc:  # abort whole ensemble
                    for other in futures:
                        other.cancel()
                    raise EnsembleError(f"trajectory {i} failed: {exc}") from exc
    else:
        for i, a in enumerate(argsets):
            try:
                records[i] = _run_one(a)
            except Exception as exc:
                raise EnsembleError(f"trajectory {i} failed: {exc}") from exc

    means = {}
    stderrs = {}
    for name in observables:
        stack = np.stack([r.observables[name] for r in records])
        means[name] = stack.mean(axis=0)
        if n_traj > 1:
            stderrs[name] = stack.std(axis=0, ddof=1) / np.sqrt(n_traj)
        else:
            stderrs[name] = np.zeros(times.size)

    avg_density = None
    dens_grid = None
    if density_times is not None:
        dens_grid = np.asarray(density_times, dtype=float)
        dim = psi0.vec.size
        sums = np.zeros((dens_grid.size, dim, dim), dtype=complex)
        for r in records:
            _, snap = r.snapshots
            for k in range(dens_grid.size):
                sums[k] += np.outer(snap[k], snap[k].conj())
        avg_density = [DensityMatrix(s / n_traj, h.space, h.dims) for s in sums]

    jump_counts = np.array([r.jump_times.size for r in records])
    return EnsembleResult(
        n_traj=n_traj, times=times, means=means, stderrs=stderrs,
        jump_counts=jump_counts, density_times=dens_grid,
        averaged_density=avg_density)
