"""Coupled cavity-field / particle-motion quantum dynamics at desk scale.

Library layers: ``hilbert`` (operator substrate), ``model`` (Hamiltonians and
derived scales), ``mcwf`` (quantum-jump trajectories and ensembles),
``liouville`` (master-equation steady states and integration), ``subspace``
(coherent-branch and spectrum-cutoff subspaces), ``observables`` (Wigner,
squeezing, negativity), topped by preset experiments and a CLI.
"""

from .hilbert import (
    ConfigurationError,
    DensityMatrix,
    Operator,
    QuantumState,
    UsageError,
    coherent_state,
    fock_ops,
    fock_state,
    ho_overlap,
    ho_overlap_matrix,
    ho_ops,
    orthonormalize,
    partial_trace,
    product_state,
    tensor,
)
from .liouville import Superoperator, assemble, integrate_master, steady_state
from .mcwf import (
    EnsembleResult,
    ProjectorObservable,
    TrajectoryRecord,
    evolve_trajectory,
    run_ensemble,
)
from .model import (
    DerivedScales,
    ModelOptions,
    SystemParams,
    TruncationConfig,
    build_effective_hamiltonian,
    build_hamiltonian,
    build_liouvillean_jump,
    resonance_detuning,
    self_consistent_resonance,
)
from .observables import (
    SqueezingReport,
    WignerGrid,
    coherent_fit_fidelity,
    default_wigner_axes,
    field_reduced,
    negativity,
    photon_stats,
    squeezing,
    wigner,
)
from .subspace import (
    CoherentBranch,
    SubspaceBasis,
    build_coherent_subspace,
    build_effective_subspace,
    load_basis,
    projector_expectation,
    save_basis,
    solve_coherent_branch,
)

__version__ = "0.1.0"
