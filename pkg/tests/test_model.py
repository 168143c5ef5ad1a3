import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import cavmotion as cm
from cavmotion.hilbert import ConfigurationError, ho_overlap_matrix
from cavmotion.model import make_particle_basis, parity_operator


class TestSystemParams:
    def test_trapping_sign_enforced(self):
        with pytest.raises(ConfigurationError):
            cm.SystemParams(kappa=1.0, v0=1.0, u0=-1.0, delta_c=0.0, eta=0.0)
        with pytest.raises(ConfigurationError):
            cm.SystemParams(kappa=1.0, v0=-1.0, u0=0.5, delta_c=0.0, eta=0.0)

    def test_kappa_unit_constructor(self):
        p = cm.SystemParams.from_kappa_units(kappa=10.0, v0=-100.0, delta_c=0.0,
                                             eta=2.5, u0=-10.0)
        assert p.eta == 25.0 and p.u0 == -100.0 and p.delta_c == 0.0


class TestDerivedScales:
    @given(st.floats(min_value=0.1, max_value=500.0),
           st.floats(min_value=0.0, max_value=500.0),
           st.floats(min_value=0.05, max_value=20.0),
           st.integers(min_value=0, max_value=40))
    @settings(max_examples=60, deadline=None)
    def test_frequency_and_length_identities(self, v0_mag, u0_mag, omega_rec, n):
        p = cm.SystemParams(kappa=1.0, v0=-v0_mag, u0=-u0_mag, delta_c=0.0,
                            eta=0.0, omega_rec=omega_rec)
        scales = cm.DerivedScales(p)
        depth = float(scales.potential_depth(n))
        om = float(scales.trap_frequency(n))
        xi = float(scales.oscillator_length(n))
        assert abs(om ** 2 - 4.0 * omega_rec * depth) < 1e-12 * max(1.0, om ** 2)
        assert abs(xi ** 4 * depth - omega_rec) < 1e-12 * max(1.0, omega_rec)

    def test_fig2_ground_oscillator_length(self, moderate_params):
        xi0 = cm.DerivedScales(moderate_params).oscillator_length(0)
        assert abs(xi0 - 0.01 ** 0.25) < 1e-12
        assert abs(xi0 - 0.3162) < 3e-4


class TestBuildHamiltonian:
    def test_hermitian_exactly(self, moderate_params):
        opts = cm.ModelOptions(trunc=cm.TruncationConfig(8, 6))
        h = cm.build_hamiltonian(moderate_params, opts)
        assert np.abs(h.mat - h.mat.conj().T).max() == 0.0

    def test_decoupled_when_u0_and_pump_vanish(self):
        p = cm.SystemParams(kappa=1.0, v0=-5.0, u0=0.0, delta_c=0.3, eta=0.0)
        opts = cm.ModelOptions(trunc=cm.TruncationConfig(5, 5, xi_ref=0.6))
        h = cm.build_hamiltonian(p, opts)
        num = np.kron(np.diag(np.arange(5.0)), np.eye(5))
        assert np.abs(h.mat @ num - num @ h.mat).max() < 1e-12

    def test_frozen_particle_spectrum(self):
        # omega_rec = 0, eta = 0: spectrum is {depth(n) * eig(x^2) - delta_c n}
        p = cm.SystemParams(kappa=1.0, v0=-3.0, u0=-1.5, delta_c=0.7, eta=0.0,
                            omega_rec=0.0)
        opts = cm.ModelOptions(parity="full", trunc=cm.TruncationConfig(4, 5, xi_ref=0.8))
        h = cm.build_hamiltonian(p, opts)
        num = np.kron(np.diag(np.arange(4.0)), np.eye(5))
        assert np.abs(h.mat @ num - num @ h.mat).max() < 1e-12
        basis = make_particle_basis(p, opts)
        x2_eigs = np.linalg.eigvalsh(basis.x2)
        expected = np.sort(np.concatenate(
            [(3.0 + 1.5 * n) * x2_eigs - 0.7 * n for n in range(4)]))
        got = np.sort(np.linalg.eigvalsh(h.mat))
        assert np.abs(expected - got).max() < 1e-10

    def test_parity_commutes_full_basis(self, moderate_params):
        opts = cm.ModelOptions(parity="full", trunc=cm.TruncationConfig(6, 10, xi_ref=0.3))
        h = cm.build_hamiltonian(moderate_params, opts)
        pi = np.kron(np.eye(6), parity_operator(10).mat)
        assert np.abs(h.mat @ pi - pi @ h.mat).max() < 1e-12

    def test_ladder_form_equivalence(self, moderate_params):
        # particle block at fixed photon number n is Omega(n) (m + 1/2) in the
        # oscillator basis of length xi(n), reached by the overlap transform
        f_levels = 96
        block = 16
        opts = cm.ModelOptions(parity="full",
                               trunc=cm.TruncationConfig(4, f_levels, xi_ref=0.20))
        basis = make_particle_basis(moderate_params, opts)
        scales = cm.DerivedScales(moderate_params)
        for n in (0, 1, 3):
            h_part = (moderate_params.omega_rec * basis.p2
                      + float(scales.potential_depth(n)) * basis.x2)
            xi_n = float(scales.oscillator_length(n))
            om = float(scales.trap_frequency(n))
            trans = ho_overlap_matrix(f_levels, f_levels, 0.20, xi_n)
            d = trans.T @ h_part @ trans
            target = om * (np.arange(block) + 0.5)
            assert np.abs(np.diag(d)[:block] - target).max() / om < 1e-8
            off = d[:block, :block] - np.diag(np.diag(d))[:block, :block]
            assert np.abs(off).max() / om < 1e-8

    def test_cos2_matches_harmonic_for_deep_well(self):
        # lowest two even levels agree within 5% once the well is deep; the
        # basis is sized to stay inside the central cosine well
        p = cm.SystemParams(kappa=1.0, v0=-400.0, u0=0.0, delta_c=0.0, eta=0.0)
        xi0 = float(cm.DerivedScales(p).oscillator_length(0))
        opts = cm.ModelOptions(parity="even_only", potential="cos2",
                               trunc=cm.TruncationConfig(4, 40, xi_ref=xi0))
        basis = make_particle_basis(p, opts, include_cos2=True)
        h_cos = p.omega_rec * basis.p2 + 400.0 * (np.eye(40) - basis.cos2)
        h_harm = p.omega_rec * basis.p2 + 400.0 * basis.x2
        e_cos = np.sort(np.linalg.eigvalsh(h_cos))[:2]
        e_harm = np.sort(np.linalg.eigvalsh(h_harm))[:2]
        assert np.abs(e_cos / e_harm - 1.0).max() < 0.05

    def test_cos2_needs_enough_even_levels(self):
        with pytest.raises(ConfigurationError):
            cm.ModelOptions(potential="cos2", parity="even_only",
                            trunc=cm.TruncationConfig(4, 3))

    def test_cos2_full_hamiltonian_builds(self, moderate_params):
        opts = cm.ModelOptions(potential="cos2", parity="even_only",
                               trunc=cm.TruncationConfig(6, 8))
        h = cm.build_hamiltonian(moderate_params, opts)
        assert np.abs(h.mat - h.mat.conj().T).max() == 0.0
        assert h.meta["potential"] == "cos2"
        assert "cos^2" in h.meta["detuning_convention"]


class TestJumpOperators:
    def test_zero_loss_rate(self, moderate_params):
        p = cm.SystemParams(kappa=0.0, v0=-1.0, u0=0.0, delta_c=0.0, eta=0.0)
        opts = cm.ModelOptions(trunc=cm.TruncationConfig(4, 3))
        jump, decay = cm.build_liouvillean_jump(p, opts)
        assert np.abs(jump.mat).max() == 0.0
        assert np.abs(decay.mat).max() == 0.0

    def test_jump_preserves_coherent_product(self):
        p = cm.SystemParams(kappa=2.0, v0=-1.0, u0=0.0, delta_c=0.0, eta=0.0)
        opts = cm.ModelOptions(trunc=cm.TruncationConfig(24, 3, xi_ref=1.0))
        jump, _ = cm.build_liouvillean_jump(p, opts)
        from cavmotion.hilbert import coherent_state, fock_state, product_state

        psi = product_state(coherent_state(1.3, 24), fock_state(1, 3, space="particle"))
        out = jump.mat @ psi.vec
        out /= np.linalg.norm(out)
        assert abs(abs(np.vdot(out, psi.vec)) - 1.0) < 1e-8


class TestEffectiveHamiltonian:
    def test_zero_recoil_reduces_to_linear_mode(self):
        p = cm.SystemParams(kappa=1.0, v0=-7.0, u0=-2.0, delta_c=0.9, eta=1.1,
                            omega_rec=0.0)
        h = cm.build_effective_hamiltonian(p, 3, 6)
        a, a_dag, num = cm.fock_ops(6)
        ref = -0.9 * num.mat + 1j * 1.1 * (a_dag.mat - a.mat)
        assert np.abs(h.mat - ref).max() < 1e-14

    def test_u0_zero_gives_constant_shift(self):
        p = cm.SystemParams(kappa=1.0, v0=-9.0, u0=0.0, delta_c=0.0, eta=0.0,
                            omega_rec=1.0)
        h = cm.build_effective_hamiltonian(p, 1, 5)
        diag = np.diag(h.mat).real
        assert np.abs(diag - 3.0 * 3.0).max() < 1e-12  # sqrt(9)*(2m+1), m=1

    def test_fig2_nonlinear_diagonal(self, moderate_params):
        h = cm.build_effective_hamiltonian(moderate_params, 0, 4)
        diag = np.diag(h.mat).real
        assert abs(diag[0] - 10.0) < 1e-12
        assert abs(diag[1] - np.sqrt(200.0)) < 1e-12
        assert abs(diag[2] - np.sqrt(300.0)) < 1e-12


class TestResonanceDetuning:
    def test_u0_zero(self):
        p = cm.SystemParams(kappa=1.0, v0=-5.0, u0=0.0, delta_c=0.0, eta=0.0)
        assert cm.resonance_detuning(p, 0) == 0.0

    def test_fig3_values(self, moderate_params):
        assert abs(cm.resonance_detuning(moderate_params, 0) - 5.0) < 1e-12
        assert abs(cm.resonance_detuning(moderate_params, 2) - 25.0) < 1e-12

    def test_singular_depth_rejected(self):
        p = cm.SystemParams(kappa=1.0, v0=0.0, u0=-1.0, delta_c=0.0, eta=0.0)
        with pytest.raises(ConfigurationError):
            cm.resonance_detuning(p, 0)

    def test_expansion_point_override(self, moderate_params):
        d0 = cm.resonance_detuning(moderate_params, 0)
        d4 = cm.resonance_detuning(moderate_params, 0, expand_at=4.0)
        scales = cm.DerivedScales(moderate_params)
        ratio = np.sqrt(scales.potential_depth(0) / scales.potential_depth(4))
        assert abs(d4 - d0 * ratio) < 1e-12
