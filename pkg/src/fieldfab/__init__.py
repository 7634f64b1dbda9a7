"""fieldfab: tensor-field urban fabric generation and design-space sweeps."""

from .fieldkit import (
    ConstraintElement,
    GridSpec,
    ScalarField,
    TensorField,
    combine_fields,
    decay_factor,
    load_scalar_map,
    make_default_field,
    make_element_field,
    sample_field,
)
from .streamtrace import (
    Streamline,
    StreetNetwork,
    TraceParams,
    emit_seeds,
    generate_level,
    generate_network,
    trace_streamline,
)
from .parcelize import (
    Block,
    Parcel,
    SubdivisionParams,
    cluster_parcels,
    inflate_and_block,
    obb_split,
    parcelize_network,
    subdivide,
)
from .massing import (
    BuildingMass,
    MassingParams,
    ProgramSpec,
    accumulate_ratio,
    allocate_programs,
    apply_constraints,
    height_from_pdm,
    parcel_ratios,
)
from .metrics import (
    MetricsRecord,
    SolarConfig,
    betweenness,
    compute_metrics,
    density_metrics,
    energy_demand,
    pv_yield,
    rep,
    walk_access,
)
from .sweep import (
    ParameterSpace,
    VariantResult,
    export_csv,
    grid_sample,
    lhs_sample,
    pareto_front,
    run_sweep,
    run_variant,
)
from .pipeline import (
    DesignBundle,
    Scenario,
    ScenarioError,
    StageError,
    generate,
    load_scenario,
    render_plan,
)

__version__ = "0.1.0"
