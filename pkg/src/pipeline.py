"""
Pipeline stages shared by the command line tools: the geometry bundle
(curve, mother body, potential, parametrix) and the polynomial bundle
(moments, monic polynomial, norms, zeros, escalation).
"""

from dataclasses import dataclass
from typing import Dict, Optional
import logging

from src.asymptotics import ParametrixData, build_parametrix
from src.model import ModelParams, Phase, classify_phase
from src.mother_body import MotherBody, Trajectory, build_contour, loops_from_c0
from src.orthopoly import NormChain, PolySolution, base_moments, build_monic_op, escalation_check, norm_chain, poly_zeros
from src.potential import PotentialData, build_potential
from src.spectral_curve import SpectralCurve, solve_curve
from src.utils.config import RunConfig

logger = logging.getLogger(__name__)


@dataclass
class Geometry:
    """N-independent geometry of one parameter set."""
    params: ModelParams
    phase: Phase
    curve: SpectralCurve
    body: MotherBody
    pot: PotentialData
    par: ParametrixData
    loops: Dict[str, Trajectory]

    def to_dict(self) -> Dict:
        body = self.body
        return {
            "phase": {"tag": self.phase.tag.value, "w_cri": self.phase.w_cri},
            "curve": self.curve.to_dict(),
            "mother_body": {
                "mass": body.mass(),
                "gamma0_length": body.gamma0.length,
                "real_crossing": body.real_crossing,
                "critical_kinds": sorted(kind.value for kind in body.critical),
            },
            "potential": self.pot.to_dict(),
            "parametrix": self.par.to_dict(),
        }


def solve_geometry(config: RunConfig, w: Optional[float] = None) -> Geometry:
    """
    Solve curve, mother body, potential and parametrix for config (or another w).

    Raises:
        PhaseError: parameters are not pre-critical
    """
    params = ModelParams(config.Q0, config.Q1, config.w if w is None else w, N=1)
    phase = classify_phase(params)
    settings = config.trace_settings()
    curve = solve_curve(params)
    body = build_contour(curve, settings)
    pot = build_potential(body)
    margin = config.quadrature.grid_margin * abs(curve.z1 - curve.z2)
    par = build_parametrix(pot, margin)
    loops = loops_from_c0(body.curve, settings)
    logger.info(f"Geometry solved for w={params.w}: ℓ0={pot.ell0:.10f}, ℓ_2D={pot.ell2D:.10f}")
    return Geometry(params, phase, body.curve, body, pot, par, loops)


@dataclass
class PolyRecord:
    """Ground truth at one (N, r0)."""
    params: ModelParams
    solution: PolySolution
    chain: NormChain
    escalation: Optional[Dict[str, float]] = None

    @property
    def key(self) -> str:
        return f"N{self.params.N}_r{self.params.r0}"

    def to_dict(self) -> Dict:
        return {
            "solution": self.solution.to_dict(),
            "norms": self.chain.to_dict(),
            "escalation": self.escalation,
        }


def solve_polynomial(config: RunConfig, N: int, r0: int, escalate: bool = True) -> PolyRecord:
    """
    Build P_{n,N} and P_{n+1,N} from one moment table, the norm chain and the zeros.

    Raises:
        PrecisionError: the escalation check fails
    """
    p = ModelParams(config.Q0, config.Q1, config.w, N, N + r0)
    n = p.n
    dps = config.precision_for(n)
    quad = config.quadrature
    table = base_moments(p, -(n + 1), n + 1, dps, initial_nodes=quad.initial_nodes, max_nodes=quad.max_nodes)
    sol = build_monic_op(p, dps, table)
    sol_next = build_monic_op(p.with_degree(n + 1), dps, table)
    chain = norm_chain(p, sol, sol_next)
    poly_zeros(sol)
    escalation = None
    if escalate:
        escalation = escalation_check(p, sol, quad.extra_digits, config.tolerances.escalation)
    return PolyRecord(p, sol, chain, escalation)


def solve_polynomials(config: RunConfig, escalate: bool = True) -> Dict[str, PolyRecord]:
    """All (N, r0) of the config; mpmath work stays on one thread."""
    records = {}
    for N in config.N_list:
        for r0 in config.r0_list:
            record = solve_polynomial(config, N, r0, escalate)
            records[record.key] = record
    return records
