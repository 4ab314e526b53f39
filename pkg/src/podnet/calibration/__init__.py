"""Measurement ingestion, statistics, closed-form predictions and calibration."""

from .formulas import (
    UnitMismatch,
    as_transfer_time,
    avg_bandwidth_per_container,
    invert_Tc,
    overhead_alpha,
    predict_Td,
    predict_Tt,
)
from .measurements import (
    HEADER,
    ImpossibleLayout,
    MeasurementSample,
    NegativeValue,
    SchemaError,
    dump_measurements,
    load_measurements,
    loads_measurements,
)
from .stats import (
    InsufficientData,
    SummaryStats,
    TTestDecision,
    ci_half_width,
    pooled_t_test,
    summarize,
    t_critical,
)
from .table import (
    CalibrationTable,
    EmptyTable,
    OverheadFactor,
    calibrate,
    calibrate_alpha,
    calibrate_Tc,
    calibrated_timing,
    calibration_from_dict,
    calibration_to_dict,
    interpolate_Tc,
)

__all__ = [
    "CalibrationTable",
    "EmptyTable",
    "HEADER",
    "ImpossibleLayout",
    "InsufficientData",
    "MeasurementSample",
    "NegativeValue",
    "OverheadFactor",
    "SchemaError",
    "SummaryStats",
    "TTestDecision",
    "UnitMismatch",
    "as_transfer_time",
    "avg_bandwidth_per_container",
    "calibrate",
    "calibrate_Tc",
    "calibrate_alpha",
    "calibrated_timing",
    "calibration_from_dict",
    "calibration_to_dict",
    "ci_half_width",
    "dump_measurements",
    "interpolate_Tc",
    "invert_Tc",
    "load_measurements",
    "loads_measurements",
    "overhead_alpha",
    "predict_Td",
    "predict_Tt",
    "pooled_t_test",
    "summarize",
    "t_critical",
]
