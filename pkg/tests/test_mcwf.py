import numpy as np
import pytest

import cavmotion as cm
from cavmotion.hilbert import Operator, UsageError, coherent_state, fock_state
from cavmotion.liouville import assemble, integrate_master
from cavmotion.mcwf import EnsembleError, derive_seed, evolve_trajectory, run_ensemble
from conftest import trace_distance


def decay_setup(kappa, n_fock):
    a, a_dag, num = cm.fock_ops(n_fock)
    h_eff = Operator(-1j * kappa * num.mat, "field")
    jump = Operator(np.sqrt(2 * kappa) * a.mat, "field")
    return h_eff, jump, num


class TestSingleTrajectory:
    def test_nojump_norm_decay_of_one_photon(self):
        kappa = 0.7
        h_eff, _, _ = decay_setup(kappa, 4)
        times = np.linspace(0.0, 2.0, 21)
        rec = evolve_trajectory(h_eff, None, fock_state(1, 4), times, seed=1)
        assert np.abs(rec.norm2 - np.exp(-2 * kappa * times)).max() < 1e-8

    def test_unitary_when_lossless(self):
        n_fock = 6
        a, a_dag, num = cm.fock_ops(n_fock)
        h = Operator(1j * 0.9 * (a_dag.mat - a.mat) - 0.5 * num.mat, "field")
        zero_jump = Operator(np.zeros((n_fock, n_fock), dtype=complex), "field")
        times = np.linspace(0.0, 3.0, 16)
        rec = evolve_trajectory(h, zero_jump, fock_state(0, n_fock), times, seed=5)
        assert np.abs(rec.norm2 - 1.0).max() < 1e-7
        assert rec.jump_times.size == 0

    def test_coherent_field_is_jump_invariant(self):
        # each trajectory follows <n>(t) = n0 exp(-2 kappa t) deterministically
        kappa = 0.6
        h_eff, jump, num = decay_setup(kappa, 24)
        psi0 = coherent_state(np.sqrt(2.0), 24)
        times = np.linspace(0.0, 1.5, 13)
        rec = evolve_trajectory(h_eff, jump, psi0, times, seed=3, observables={"n": num})
        expected = 2.0 * np.exp(-2 * kappa * times)
        assert np.abs(rec.observables["n"] - expected).max() < 1e-7

    def test_norm_monotone_between_jumps(self):
        kappa = 0.9
        h_eff, jump, _ = decay_setup(kappa, 24)
        psi0 = coherent_state(np.sqrt(3.0), 24)
        times = np.linspace(0.0, 1.0, 201)
        rec = evolve_trajectory(h_eff, jump, psi0, times, seed=11)
        jumps = rec.jump_times
        for k in range(len(times) - 1):
            crossed = ((jumps > times[k]) & (jumps <= times[k + 1])).any()
            if not crossed:
                assert rec.norm2[k + 1] <= rec.norm2[k] + 1e-12

    def test_fock_decay_jump_lowers_photon_number(self):
        kappa = 2.0
        h_eff, jump, num = decay_setup(kappa, 4)
        times = np.linspace(0.0, 6.0, 7)
        rec = evolve_trajectory(h_eff, jump, fock_state(2, 4), times, seed=2,
                                observables={"n": num})
        # after long decay every trajectory has cascaded to vacuum
        assert rec.jump_times.size == 2
        assert abs(rec.observables["n"][-1]) < 1e-9

    def test_input_validation(self):
        h_eff, jump, _ = decay_setup(1.0, 4)
        bad = cm.QuantumState(np.array([1.0, 1.0, 0, 0], dtype=complex), "field")
        with pytest.raises(UsageError):
            evolve_trajectory(h_eff, jump, bad, [0.0, 1.0], seed=0)
        with pytest.raises(UsageError):
            evolve_trajectory(h_eff, jump, fock_state(0, 4), [0.0, 0.0], seed=0)


class TestEnsemble:
    def test_single_trajectory_equals_ensemble_mean(self):
        kappa = 0.5
        h_eff, jump, num = decay_setup(kappa, 12)
        psi0 = coherent_state(1.0, 12)
        times = np.linspace(0.0, 1.0, 6)
        ens = run_ensemble(h_eff, jump, psi0, times, n_traj=1, master_seed=9,
                           observables={"n": num})
        rec = evolve_trajectory(h_eff, jump, psi0, times, seed=derive_seed(9, 0),
                                observables={"n": num})
        assert np.array_equal(ens.means["n"], rec.observables["n"])
        assert np.all(ens.stderrs["n"] == 0.0)

    def test_bit_identical_reruns(self):
        kappa = 0.8
        h_eff, jump, num = decay_setup(kappa, 10)
        psi0 = coherent_state(0.9, 10)
        times = np.linspace(0.0, 2.0, 9)
        e1 = run_ensemble(h_eff, jump, psi0, times, n_traj=20, master_seed=123,
                          observables={"n": num})
        e2 = run_ensemble(h_eff, jump, psi0, times, n_traj=20, master_seed=123,
                          observables={"n": num})
        assert np.array_equal(e1.means["n"], e2.means["n"])
        assert np.array_equal(e1.stderrs["n"], e2.stderrs["n"])
        assert np.array_equal(e1.jump_counts, e2.jump_counts)

    def test_worker_count_does_not_change_results(self):
        kappa = 0.8
        h_eff, jump, num = decay_setup(kappa, 10)
        psi0 = coherent_state(0.9, 10)
        times = np.linspace(0.0, 1.0, 5)
        serial = run_ensemble(h_eff, jump, psi0, times, n_traj=8, master_seed=77,
                              observables={"n": num})
        parallel = run_ensemble(h_eff, jump, psi0, times, n_traj=8, master_seed=77,
                                observables={"n": num}, workers=2)
        assert np.array_equal(serial.means["n"], parallel.means["n"])
        assert np.array_equal(serial.stderrs["n"], parallel.stderrs["n"])

    def test_ensemble_matches_analytic_decay(self):
        kappa = 0.6
        h_eff, jump, num = decay_setup(kappa, 24)
        psi0 = coherent_state(np.sqrt(2.0), 24)
        times = np.linspace(0.0, 1.5, 7)
        ens = run_ensemble(h_eff, jump, psi0, times, n_traj=64, master_seed=4,
                           observables={"n": num})
        expected = 2.0 * np.exp(-2 * kappa * times)
        tol = np.maximum(3 * ens.stderrs["n"], 1e-7)
        assert np.all(np.abs(ens.means["n"] - expected) <= tol)

    def test_jump_counts_poisson_consistent(self):
        # long decay of a coherent state: total jump count is Poisson with
        # mean |alpha|^2, so sample mean and variance must agree within 3 sigma
        kappa = 1.0
        h_eff, jump, num = decay_setup(kappa, 24)
        n0 = 4.0
        psi0 = coherent_state(2.0, 24)
        times = np.linspace(0.0, 4.0, 5)  # kappa T = 4 >> 1
        ens = run_ensemble(h_eff, jump, psi0, times, n_traj=400, master_seed=15)
        counts = ens.jump_counts
        mean = counts.mean()
        var = counts.var(ddof=1)
        n = counts.size
        # var(sample var) ~ lambda^2 (2/(n-1)) + lambda/n for Poisson
        sigma = np.sqrt(mean ** 2 * 2 / (n - 1) + mean / n)
        assert abs(var - mean) < 3 * sigma
        assert abs(mean - n0 * (1 - np.exp(-2 * kappa * 4.0))) < 3 * np.sqrt(n0 / n)

    def test_stderr_scaling_with_ensemble_size(self):
        # Fock-state decay has genuinely random jump cascades, so the sample
        # stderr is statistical and must shrink like 1/sqrt(n_traj)
        kappa = 0.8
        h_eff, jump, num = decay_setup(kappa, 5)
        psi0 = fock_state(3, 5)
        h = h_eff
        times = np.linspace(0.0, 1.5, 5)
        e_small = run_ensemble(h, jump, psi0, times, n_traj=200, master_seed=31,
                               observables={"n": num})
        e_big = run_ensemble(h, jump, psi0, times, n_traj=400, master_seed=32,
                             observables={"n": num})
        ratio = e_small.stderrs["n"][1:] / e_big.stderrs["n"][1:]
        expected = np.sqrt(2.0)
        assert np.all(ratio < expected * 1.5)
        assert np.all(ratio > expected / 1.5)

    def test_failure_carries_trajectory_index(self):
        h_eff, jump, _ = decay_setup(1.0, 4)
        bad = cm.QuantumState(np.array([0.9, 0.1, 0, 0], dtype=complex), "field")
        with pytest.raises(EnsembleError, match="trajectory 0"):
            run_ensemble(h_eff, jump, bad, [0.0, 1.0], n_traj=3, master_seed=1)


class TestOracleEquivalence:
    def test_small_product_system_matches_master_equation(self, small_coupled_system):
        params, opts, h, jump, decay, psi0 = small_coupled_system
        h_eff = h + (-1j) * decay
        times = np.linspace(0.0, 3.0, 6)
        rhos = integrate_master(assemble(h, params.kappa), psi0.density_matrix(), times)
        ens = run_ensemble(h_eff, jump, psi0, times, n_traj=600, master_seed=21,
                           density_times=times)
        tds = [trace_distance(ens.averaged_density[k].mat, rhos[k].mat)
               for k in range(len(times))]
        assert max(tds) < 0.05
        for rho in ens.averaged_density:
            assert abs(rho.trace - 1.0) < 1e-8
            assert np.abs(rho.mat - rho.mat.conj().T).max() < 1e-12
