"""Upper-tail large deviations for homomorphism densities in block graphons."""

from .cutnorm import CutBounds, cut_norm_distance, delta_cut_bounds
from .entropy import Convexity, PsiProfile, analyze_psi, bernoulli_kl, limit_entropy_ratio, on_minorant, p_zero, psi_eval
from .errors import (
    CapacityError,
    DomainError,
    FormatError,
    GraphonError,
    InfeasibleError,
    InsufficientConditioningError,
    InvalidLabelingError,
    StructuralError,
    WitnessNotFoundError,
)
from .graphon import (
    StepGraphon,
    bipartite,
    common_refinement,
    constant,
    d_average,
    f_max_graphon,
    hom_density,
    hom_density_exact,
    in_omega,
    labeled_density,
    omega_mask,
    relative_entropy,
    relevant_blocks,
    two_block,
)
from .graphs import FiniteGraph, load_graph, parse_graph
from .io import dumps, load_graphon, save_graphon
from .linalg import jacobi_eigenvalues, operator_norm
from .sampler import (
    SampledGraph,
    TailEstimate,
    conditional_concentration,
    empirical_density,
    exact_tail,
    sample_graph,
    tail_estimate,
)
from .variational import (
    ConstraintKind,
    Phase,
    Regime,
    VariationalSolution,
    bipartite_phase,
    phase_scan,
    phi_bracket,
    symmetric_min,
)
from .witnesses import Witness, witness_clique, witness_geps, witness_planted

__version__ = "0.1.0"
