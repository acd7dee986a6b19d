"""Intrinsic dimension module for the multi-manifold toolkit."""
from .gmst import GmstFit, GmstParams, compute_all_gmst, gmst_edge_length, gmst_local_dimension
from .variance import (
    UNDEFINED_CODE,
    IdParams,
    LocalIdRecord,
    Strata,
    compute_all_ids,
    d_vid,
    d_vlid,
    diagnostic_encodings,
    dimension_agreement,
    dimension_from_sigma,
    stratify,
)

__all__ = [
    "GmstFit",
    "GmstParams",
    "IdParams",
    "LocalIdRecord",
    "Strata",
    "UNDEFINED_CODE",
    "compute_all_gmst",
    "compute_all_ids",
    "d_vid",
    "d_vlid",
    "diagnostic_encodings",
    "dimension_agreement",
    "dimension_from_sigma",
    "gmst_edge_length",
    "gmst_local_dimension",
    "stratify",
]
