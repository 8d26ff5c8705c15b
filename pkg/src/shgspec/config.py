"""Run configuration and the versioned threshold table.

All tolerances live here in one place so the verification suite and the CLI
share a single source of truth.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

from .potential import Potential

# thresholds keyed by check id (see verification.run_suite)
THRESHOLDS = {
    "monodromy_zero_closed_forms": 1e-8,
    "monodromy_wronskian": 1e-9,
    "monodromy_evenness": 1e-9,
    "monodromy_real_symmetry": 1e-10,
    "zero_spectrum": 1e-9,
    "counting_annulus": 0.5,
    "counting_discs": 0.5,
    "reciprocity": 1e-7,
    "reality_confinement": 1e-7,
    "product_reps": 1e-4,
    "product_reps_monotone": 0.5,
    "constraint_products": 1e-4,
    "canonical_zero": 1e-7,
    "canonical_symmetries": 1e-7,
    "sign_tables": 0.5,
    "gradient_fd": 1e-5,
    "gradient_fd_order": -1.9,  # negative: metric is -order, pass if <= -1.9
    "gradient_zero_delta": 1e-9,
    "sigma_solve_residual": 1e-9,
    "sigma_newton_iters": 10.5,
    "normalization": 1e-6,
    "normalization_negative": 1e-6,
    "gap_confinement": 1e-8,
    "sigma_tau_estimate": 5.0,
    "interpolation": 1e-5,
    "trace_formula": 1e-7,
    "lamdot_refined": 10.0,
    "constraint_monotone": 0.5,
}


@dataclass
class RunConfig:
    """Knobs shared by the CLI and the verification suite."""

    n_max: int = 16
    K: int = 16
    nodes: int = 64
    newton_tol: float = 1e-9
    newton_max_iter: int = 12
    ode_tol: float = 1e-11
    spectral_tol: float = 1e-13
    seed: int = 0
    threads: int = 0  # 0 = leave BLAS defaults
    out_format: str = "json"
    product_K_list: tuple = (8, 16, 24, 32)
    differentials_n_list: tuple = (0, 1, 2)
    thresholds: dict = field(default_factory=lambda: dict(THRESHOLDS))

    def __post_init__(self):
        if self.K < self.n_max:
            raise ValueError("K must be >= N_max")
        for name in ("newton_tol", "ode_tol", "spectral_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @staticmethod
    def from_json(text: str) -> "RunConfig":
        d = json.loads(text)
        thr = dict(THRESHOLDS)
        thr.update(d.pop("thresholds", {}))
        cfg = RunConfig(**{k: v for k, v in d.items() if k != "thresholds"})
        cfg.thresholds = thr
        return cfg

    def to_json(self) -> str:
        d = asdict(self)
        d["product_K_list"] = list(self.product_K_list)
        d["differentials_n_list"] = list(self.differentials_n_list)
        return json.dumps(d, indent=2)


def seeded_ensemble(grid_size=64):
    """The fixed test potentials of the verification suite: two real, one
    genuinely complex but close to real."""
    v1 = Potential.cosine(0.1, grid_size=grid_size)
    v2 = Potential.from_modes(
        {1: 0.025, 2: 0.015j},
        {1: 0.01},
        Kf=2,
        grid_size=grid_size,
    )
    v3 = Potential.from_modes(
        {1: 0.03 + 0.002j, -1: 0.03, 2: 0.008, -2: 0.008 - 0.003j},
        {1: 0.012 + 0.004j, -1: 0.012, -2: 0.005j},
        Kf=2,
        grid_size=grid_size,
        real=False,
    )
    return [v1, v2, v3]
