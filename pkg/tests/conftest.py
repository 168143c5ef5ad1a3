import numpy as np
import pytest

import cavmotion as cm


@pytest.fixture(scope="session")
def moderate_params():
    # (kappa, V0) = (10, -100) recoil units, (Delta_C, eta, U0) = (0, 2.5, -10) kappa
    return cm.SystemParams.from_kappa_units(kappa=10.0, v0=-100.0, delta_c=0.0,
                                            eta=2.5, u0=-10.0)


@pytest.fixture(scope="session")
def strong_params():
    # same but U0 = -100 kappa
    return cm.SystemParams.from_kappa_units(kappa=10.0, v0=-100.0, delta_c=0.0,
                                            eta=2.5, u0=-100.0)


@pytest.fixture(scope="session")
def decay_params():
    # (kappa, V0) = (0.1, -60) recoil units, unpumped, U0 = -100 kappa
    return cm.SystemParams.from_kappa_units(kappa=0.1, v0=-60.0, delta_c=0.0,
                                            eta=0.0, u0=-100.0)


def trace_distance(r1: np.ndarray, r2: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.linalg.eigvalsh(r1 - r2)).sum())


@pytest.fixture(scope="session")
def small_coupled_system():
    """Tiny product-space system used for MCWF / master-equation cross checks."""
    params = cm.SystemParams(kappa=1.0, v0=-2.0, u0=-0.8, delta_c=0.4, eta=0.9,
                             omega_rec=0.6)
    opts = cm.ModelOptions(parity="even_only",
                           trunc=cm.TruncationConfig(n_fock=4, m_levels=3, xi_ref=0.74))
    h = cm.build_hamiltonian(params, opts)
    jump, decay = cm.build_liouvillean_jump(params, opts)
    from cavmotion.hilbert import coherent_state, fock_state, product_state

    psi0 = product_state(coherent_state(0.5, 4, tail_tol=1e-2),
                         fock_state(0, 3, space="particle"))
    return params, opts, h, jump, decay, psi0
