"""Numerical laboratory for area variations of parametrized surfaces in
almost Kahler ambient models."""

from __future__ import annotations

__version__ = "0.1.0"

from .ambient import (
    AmbientModel,
    ChartPoint,
    ChartUnitary,
    ConsistencyError,
    FubiniStudyModel,
    flat_model,
    fubini_study_model,
    metric_from_pair,
    metric_from_pair_checked,
    squeezed_torus_model,
    taming_margin,
)
from .surfaces import (
    AdaptedFrame,
    ImmersionError,
    ParamSurface,
    PeriodicSaddle,
    SecondFundamentalForm,
    SurfaceFunctionJet,
    SurfaceGrid,
    affine_torus_surface,
    make_surface,
)
from .potentials import (
    AmbientOneForm,
    BumpField,
    FourierField,
    KillingSpec,
    PolyField,
    PotentialJet,
    covariant_norm_sq,
    ddc_along,
    distance_squared_jet,
    killing_for_pairing,
    killing_from_matrix,
    killing_variation_form,
    normal_extension_jet,
    normal_pairing,
    random_potential,
    saddle_potential,
    sample_jet,
)
from .variations import (
    DeformationPath,
    ExactOneFormPath,
    FlowPath,
    GeneralPotentialPath,
    LinearPotentialPath,
    MetricDeformation,
    OracleResult,
    TwoFormLinearPath,
    VariationReport,
    area_along,
    area_path_oracle,
    d2_decomposed,
    d_fields,
    d_fields_raw,
    destabilize,
    first_variation,
    first_variation_expanded,
    general_first_variation,
    killing_flow_path,
    metric_deformation,
    metric_first_variation_oracle,
    metric_scaling_destabilizers,
    second_variation,
    second_variation_of_path,
    taming_tmax,
)
