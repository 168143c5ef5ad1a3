"""Canonical experiment configurations and the initial-state constructor.

A run is fully described by a serializable ``RunConfig``; the presets encode
the three headline experiments (moderate-coupling trajectory ensemble,
strong-coupling subspace diagnostics, per-level steady states at resonance,
and the unpumped decay that squeezes the field), each at a desk-scale
truncation with an optional reduced smoke scale for quick checks.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .hilbert import ConfigurationError, QuantumState, coherent_state, fock_state, product_state
from .model import (
    DerivedScales,
    ModelOptions,
    SystemParams,
    TruncationConfig,
    make_particle_basis,
    embed_oscillator_state,
)

EXPERIMENTS = ("trajectory_ensemble", "effective_steady", "subspace_diagnostic",
               "decay_squeezing", "custom")


@dataclass(frozen=True)
class TimeGridSpec:
    """Uniform sampling grid: n_points over [0, t_final]."""

    t_final: float
    n_points: int

    def build(self) -> np.ndarray:
        if self.t_final <= 0 or self.n_points < 2:
            raise ConfigurationError("time grid needs t_final > 0 and n_points >= 2")
        return np.linspace(0.0, self.t_final, self.n_points)


@dataclass(frozen=True)
class RunConfig:
    """Complete, reproducible description of one CLI run."""

    experiment: str
    params: SystemParams
    opts: ModelOptions
    times: TimeGridSpec
    n_traj: int = 300
    master_seed: int = 20260810
    m_list: tuple[int, ...] = (0, 2, 4, 6, 8)
    epsilons: tuple[float, ...] = ()
    initial_state: dict = field(default_factory=dict)
    quasi_steady_window: tuple[float, float] | None = None
    track_density: bool = False
    resonance_m: tuple[int, ...] = ()
    resonance_mode: str = "taylor_n0"  # or "self_consistent" 
    label: str = "run"
    workers: int = 1
    rtol: float = 1e-8
    convergence_check: bool = False
    convergence_tol: float = 0.05
    subspace_tail_tol: float = 1e-6

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigurationError(f"unknown experiment {self.experiment!r}")
        if self.n_traj < 1:
            raise ConfigurationError("n_traj must be >= 1")
        if self.resonance_mode not in ("taylor_n0", "self_consistent"):
            raise ConfigurationError(f"unknown resonance mode {self.resonance_mode!r}")


def config_to_dict(cfg: RunConfig) -> dict:
    out = dataclasses.asdict(cfg)
    out["params"] = dataclasses.asdict(cfg.params)
    out["opts"] = {
        "potential": cfg.opts.potential,
        "parity": cfg.opts.parity,
        "trunc": dataclasses.asdict(cfg.opts.trunc),
    }
    out["times"] = dataclasses.asdict(cfg.times)
    out["m_list"] = list(cfg.m_list)
    out["epsilons"] = list(cfg.epsilons)
    out["resonance_m"] = list(cfg.resonance_m)
    out["quasi_steady_window"] = (list(cfg.quasi_steady_window)
                                  if cfg.quasi_steady_window else None)
    return out


def config_from_dict(payload: dict) -> RunConfig:
    try:
        params = SystemParams(**payload["params"])
        opts = ModelOptions(potential=payload["opts"]["potential"],
                            parity=payload["opts"]["parity"],
                            trunc=TruncationConfig(**payload["opts"]["trunc"]))
        times = TimeGridSpec(**payload["times"])
        window = payload.get("quasi_steady_window")
        return RunConfig(
            experiment=payload["experiment"], params=params, opts=opts, times=times,
            n_traj=payload["n_traj"], master_seed=payload["master_seed"],
            m_list=tuple(payload["m_list"]), epsilons=tuple(payload["epsilons"]),
            initial_state=payload["initial_state"],
            quasi_steady_window=tuple(window) if window else None,
            track_density=payload["track_density"],
            resonance_m=tuple(payload.get("resonance_m", ())),
            resonance_mode=payload.get("resonance_mode", "taylor_n0"),
            label=payload["label"], workers=payload["workers"], rtol=payload["rtol"],
            convergence_check=payload["convergence_check"],
            convergence_tol=payload["convergence_tol"],
            subspace_tail_tol=payload.get("subspace_tail_tol", 1e-6))
    except KeyError as exc:
        raise ConfigurationError(f"config is missing field {exc}") from exc
    except TypeError as exc:
        raise ConfigurationError(f"config field error: {exc}") from exc


def initial_state(spec: dict, params: SystemParams, opts: ModelOptions) -> QuantumState:
    """Build the product initial state from its serializable description.

    Field part: ``{"kind": "vacuum"}``, ``{"kind": "fock", "n": k}`` or
    ``{"kind": "coherent", "alpha": [re, im]}`` (truncation tail must stay
    below 1e-6).  Particle part: superposition of oscillator eigenstates with
    an explicit length, ``{"terms": [[coeff, m], ...], "xi": value}``.
    """
    basis = make_particle_basis(params, opts)
    n_fock = opts.trunc.n_fock
    fspec = spec.get("field", {"kind": "vacuum"})
    kind = fspec.get("kind", "vacuum")
    if kind == "vacuum":
        fstate = fock_state(0, n_fock)
    elif kind == "fock":
        fstate = fock_state(int(fspec["n"]), n_fock)
    elif kind == "coherent":
        re, im = fspec["alpha"]
        fstate = coherent_state(complex(re, im), n_fock, tail_tol=1e-6)
    else:
        raise ConfigurationError(f"unknown field state kind {kind!r}")

    pspec = spec.get("particle", {"terms": [[1.0, 0]], "xi": None})
    xi = pspec.get("xi")
    if xi is None:
        xi = float(DerivedScales(params).oscillator_length(0.0))
    vec = np.zeros(basis.dim, dtype=complex)
    for coeff, m in pspec["terms"]:
        coeffs, residual = embed_oscillator_state(int(m), float(xi), basis)
        if residual > 1e-3:
            raise ConfigurationError(
                f"particle level m={m} at xi={xi:.4g} loses {residual:.2e} to the "
                "retained basis; increase m_levels")
        vec += complex(coeff) * coeffs
    nrm = np.linalg.norm(vec)
    if nrm == 0:
        raise ConfigurationError("particle state collapsed to zero in the retained basis")
    pstate = QuantumState(vec / nrm, "particle")
    return product_state(fstate, pstate)


# ---------------------------------------------------------------------------
# presets


def _moderate_params() -> SystemParams:
    return SystemParams.from_kappa_units(kappa=10.0, v0=-100.0, delta_c=0.0,
                                         eta=2.5, u0=-10.0)


def _strong_params() -> SystemParams:
    return SystemParams.from_kappa_units(kappa=10.0, v0=-100.0, delta_c=0.0,
                                         eta=2.5, u0=-100.0)


def _decay_params() -> SystemParams:
    return SystemParams.from_kappa_units(kappa=0.1, v0=-60.0, delta_c=0.0,
                                         eta=0.0, u0=-100.0)


def preset_fig2(scale: str = "full", initial: str = "superposition") -> RunConfig:
    """Moderate-coupling ensemble; projector diagnostics of the coherent subspace."""
    params = _moderate_params()
    xi0 = float(DerivedScales(params).oscillator_length(0.0))
    if initial == "ground":
        terms = [[1.0, 0]]
    elif initial == "superposition":
        terms = [[2 ** -0.5, 0], [2 ** -0.5, 2]]
    else:
        raise ConfigurationError("initial must be 'ground' or 'superposition'")
    full = scale == "full"
    return RunConfig(
        experiment="trajectory_ensemble",
        params=params,
        opts=ModelOptions(parity="even_only",
                          trunc=TruncationConfig(n_fock=22 if full else 14,
                                                 m_levels=14 if full else 8)),
        times=TimeGridSpec(t_final=5.0 if full else 0.5, n_points=151 if full else 11),
        n_traj=300 if full else 10,
        m_list=(0, 2, 4, 6, 8, 10),
        initial_state={"field": {"kind": "vacuum"},
                       "particle": {"terms": terms, "xi": xi0}},
        quasi_steady_window=(2.5, 5.0) if full else (0.25, 0.5),
        label=f"fig2_{initial}",
        subspace_tail_tol=1e-6 if full else 1e-2,
    )


def preset_overlaps(scale: str = "full") -> RunConfig:
    """Strong-coupling ensemble comparing coherent and cutoff subspaces."""
    params = _strong_params()
    xi0 = float(DerivedScales(params).oscillator_length(0.0))
    full = scale == "full"
    return RunConfig(
        experiment="subspace_diagnostic",
        params=params,
        opts=ModelOptions(parity="even_only",
                          trunc=TruncationConfig(n_fock=18 if full else 12,
                                                 m_levels=18 if full else 8,
                                                 xi_ref=0.19)),
        times=TimeGridSpec(t_final=3.0 if full else 0.3, n_points=121 if full else 7),
        n_traj=300 if full else 10,
        m_list=(0, 2, 4, 6, 8),
        epsilons=(1e-1, 1e-4),
        initial_state={"field": {"kind": "vacuum"},
                       "particle": {"terms": [[1.0, 0]], "xi": xi0}},
        quasi_steady_window=(1.0, 3.0) if full else (0.2, 0.3),
        label="overlaps",
        subspace_tail_tol=1e-6 if full else 1e-2,
    )


def preset_fig3(scale: str = "full") -> RunConfig:
    """Per-level conditional steady states at the resonance-adjusted detuning."""
    params = _moderate_params()
    full = scale == "full"
    return RunConfig(
        experiment="effective_steady",
        params=params,
        opts=ModelOptions(parity="even_only",
                          trunc=TruncationConfig(n_fock=48 if full else 16, m_levels=4)),
        times=TimeGridSpec(t_final=1.0, n_points=2),
        n_traj=1,
        m_list=(0, 2, 4, 8),
        resonance_m=(0, 2, 4, 8),
        resonance_mode="self_consistent",
        label="fig3",
    )


def preset_fig4(scale: str = "full") -> RunConfig:
    """Unpumped decay of a few-photon coherent state; squeezing and negativity."""
    params = _decay_params()
    full = scale == "full"
    alpha0 = 2.0 if full else 1.0
    xi = float(DerivedScales(params).oscillator_length(alpha0 ** 2))
    return RunConfig(
        experiment="decay_squeezing",
        params=params,
        opts=ModelOptions(parity="even_only",
                          trunc=TruncationConfig(n_fock=22 if full else 12,
                                                 m_levels=12 if full else 6,
                                                 xi_ref=xi)),
        times=TimeGridSpec(t_final=25.0 if full else 2.0, n_points=126 if full else 6),
        n_traj=300 if full else 10,
        m_list=(0,),
        initial_state={"field": {"kind": "coherent", "alpha": [alpha0, 0.0]},
                       "particle": {"terms": [[1.0, 0]], "xi": xi}},
        track_density=True,
        quasi_steady_window=(20.0, 25.0) if full else (1.5, 2.0),
        label="fig4",
    )


PRESETS = {
    "fig2": preset_fig2,
    "overlaps": preset_overlaps,
    "fig3": preset_fig3,
    "fig4": preset_fig4,
}
