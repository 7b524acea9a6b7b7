"""Information cost functionals, Blackwell comparisons and belief processes."""

__version__ = "0.1.0"

from .axioms import (
    AxiomReport,
    check_additivity,
    check_assumption2,
    check_axiom0,
    check_dilution_linearity,
    check_fie,
    check_monotonicity,
    check_subadditivity,
    replay,
)
from .blackwell import (
    OrderingResult,
    Relation,
    compare,
    dominates,
    matrix_dominates,
    merge_replicated_rows,
    mutual_garbling_is_permutation,
    replicated_pairs,
)
from .costs import (
    CostFunctional,
    DivergenceFunction,
    PotentialFunction,
    binary_fie_cost,
    binary_fie_kl_form,
    binary_fie_potential,
    cost_from_spec,
    kernel_cost,
    mutual_information,
    power_transform,
    ps_from_divergence,
    ups_from_potential,
    variance_cost,
)
from .dynamic import (
    DynamicProblem,
    FlowTransform,
    PoissonStrategy,
    check_solution_properties,
    poisson_value,
    simulate,
    static_objective,
    static_solve,
)
from .errors import InvariantError, NumericalError
from .local import (
    estimate_kernel,
    fisher_kernel,
    hessian_integrability_check,
    integrate_potential_binary,
    prior_independent_kernel,
)
from .replication import (
    BeliefProcess,
    SignalTree,
    Stage,
    dilution_chain,
    indirect_upper,
    markovianize,
    peeling_decomposition,
    process_cost,
    random_walk_replication,
    terminal_law,
    verify_replicates,
)
from .structures import (
    InformationStructure,
    MarkovKernel,
    SignalExperiment,
    compose,
    dilution,
    from_experiment,
    garble,
    make_structure,
    mix,
    to_experiment,
)
