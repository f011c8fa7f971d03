from .metrics import (
    CorrelationResult,
    cosine_distance,
    pearson_correlation,
    pairwise_distances,
    rank_gallery,
)
from .qta import (
    Qta1Report,
    AttributeControlReport,
    PreferenceReport,
    RetrievalReport,
    qta1_condition_correlation,
    qta1_attribute_control,
    qta2_vf_preference,
    qta2_fv_accuracy,
    qta3_retrieval,
)
from .interpolate import interpolate_grid
from .reference import get_reference_results

__all__ = [
    "CorrelationResult",
    "cosine_distance",
    "pearson_correlation",
    "pairwise_distances",
    "rank_gallery",
    "Qta1Report",
    "AttributeControlReport",
    "PreferenceReport",
    "RetrievalReport",
    "qta1_condition_correlation",
    "qta1_attribute_control",
    "qta2_vf_preference",
    "qta2_fv_accuracy",
    "qta3_retrieval",
    "interpolate_grid",
    "get_reference_results",
]
