import io
import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats as sps

from podnet.calibration import (
    CalibrationTable,
    EmptyTable,
    ImpossibleLayout,
    InsufficientData,
    NegativeValue,
    OverheadFactor,
    SchemaError,
    SummaryStats,
    UnitMismatch,
    as_transfer_time,
    avg_bandwidth_per_container,
    calibrate,
    calibrate_alpha,
    calibrate_Tc,
    calibrated_timing,
    calibration_from_dict,
    calibration_to_dict,
    ci_half_width,
    dump_measurements,
    interpolate_Tc,
    invert_Tc,
    load_measurements,
    loads_measurements,
    overhead_alpha,
    pooled_t_test,
    predict_Td,
    predict_Tt,
    summarize,
    t_critical,
)

HEADER = "experiment,n,pods,containers,repetition,metric,value,unit\n"

# (C, mean_1, std_1, mean_2, std_2, published verdict)
EXEC_TIME_CPU = [
    (1, 23.52, 0.82, 23.19, 0.64, True),
    (4, 60.85, 1.45, 65.02, 1.25, False),
    (8, 85.98, 2.25, 91.36, 2.24, False),
    (12, 108.54, 4.14, 91.36, 3.40, False),
    (20, 153.51, 6.47, 170.99, 5.28, False),
]
EXEC_TIME_IO = [
    (1, 123.47, 0.43, 123.38, 0.39, True),
    (4, 473.65, 0.96, 475.15, 0.62, False),
    (8, 946.90, 0.72, 946.63, 0.69, True),
    (12, 1417.76, 1.67, 1420.40, 1.35, False),
]


def _stats(mean, std, n=30):
    return SummaryStats.from_moments(mean, std, n)


# -- measurement files ---------------------------------------------------------


def test_header_only_file_is_empty():
    assert loads_measurements(HEADER) == []


def test_units_are_normalised():
    rows = loads_measurements(
        HEADER
        + "e,8,40,40,1,deploy_time_s,10240,ms\n"
        + "e,8,40,40,1,bandwidth_gb,8,gbit\n"
        + "e,8,40,40,2,exec_time_s,2,min\n"
    )
    assert [(r.metric, r.value) for r in rows] == [("deploy_time_s", 10.24), ("bandwidth_gb", 1.0), ("exec_time_s", 120.0)]
    assert rows[0].rho == 1


@pytest.mark.parametrize(
    "body, exc",
    [
        ("e,8,41,40,1,deploy_time_s,1,s\n", ImpossibleLayout),
        ("e,8,4,40,1,deploy_time_s,-1,s\n", NegativeValue),
        ("e,8,4,40,1,deploy_time_s,1,kg\n", SchemaError),
        ("e,8,4,40,1,latency,1,s\n", SchemaError),
        ("e,eight,4,40,1,deploy_time_s,1,s\n", SchemaError),
    ],
)
def test_bad_rows(body, exc):
    with pytest.raises(exc):
        loads_measurements(HEADER + body)


def test_impossible_layout_is_a_negative_value_error():
    assert issubclass(ImpossibleLayout, NegativeValue)


def test_wrong_header():
    with pytest.raises(SchemaError):
        loads_measurements("a,b,c\n1,2,3\n")


def test_dump_round_trip(tmp_path):
    text = HEADER + "e,8,40,40,1,deploy_time_s,10.24,s\ne,8,8,40,1,exec_time_s,3.5,s\n"
    samples = loads_measurements(text)
    path = tmp_path / "m.csv"
    path.write_text(dump_measurements(samples))
    assert load_measurements(path) == samples
    assert load_measurements(io.StringIO(text)) == samples


def test_synthesised_series_summarises_near_published_mean():
    rng = np.random.default_rng(0)
    body = "".join(f"t2,8,40,40,{i},deploy_time_s,{v:.6f},s\n" for i, v in enumerate(rng.normal(10.24, 0.1, 30)))
    s = summarize([r.value for r in loads_measurements(HEADER + body)])
    assert s.count == 30
    assert s.ci_low < 10.24 < s.ci_high


# -- statistics ---------------------------------------------------------------


def test_summary_of_constant_values():
    s = summarize([5, 5, 5, 5])
    assert (s.mean, s.std, s.ci_low, s.ci_high) == (5, 0, 5, 5)


def test_ci_half_width_uses_normal_quantile():
    z = sps.norm.ppf(0.975)
    assert ci_half_width(0.43, 30) == pytest.approx(z * 0.43 / math.sqrt(30), rel=1e-12)
    assert ci_half_width(0.43, 30) == pytest.approx(0.1539, abs=1e-4)


def test_single_value_is_insufficient():
    with pytest.raises(InsufficientData):
        summarize([1.0])


@pytest.mark.parametrize("row", EXEC_TIME_CPU + EXEC_TIME_IO, ids=lambda r: str(r[:1]))
def test_pooled_statistic_matches_reference(row):
    _, m1, s1, m2, s2, _ = row
    d = pooled_t_test(_stats(m1, s1), _stats(m2, s2))
    ref = sps.ttest_ind_from_stats(m1, s1, 30, m2, s2, 30, equal_var=True)
    assert d.t_statistic == pytest.approx(ref.statistic, rel=1e-12)
    assert d.degrees_of_freedom == 58


def test_io_table_first_row_value():
    d = pooled_t_test(_stats(123.47, 0.43), _stats(123.38, 0.39))
    assert d.t_statistic == pytest.approx(0.849, abs=1e-3)
    assert d.critical_value == pytest.approx(2.0017, abs=1e-4)
    assert not d.reject_H0


def test_identical_samples_are_accepted():
    d = pooled_t_test(_stats(1.0, 0.2), _stats(1.0, 0.2))
    assert d.t_statistic == 0 and not d.reject_H0


def test_zero_variance_with_different_means_rejects():
    d = pooled_t_test(_stats(1.0, 0.0), _stats(2.0, 0.0))
    assert d.t_statistic == -math.inf and d.reject_H0


def test_t_critical_matches_reference():
    assert t_critical(0.05, 58) == pytest.approx(sps.t.ppf(0.975, 58), rel=1e-12)


# -- closed forms ---------------------------------------------------------------


def test_deployment_formula():
    assert predict_Td(40, 40, 8, 2.048) == pytest.approx(10.24)
    assert predict_Td(1, 1, 8, 3.3) == 3.3
    assert predict_Td(20, 20, 8, 2.048) == pytest.approx(5.12)


def test_inversion():
    assert invert_Tc(10.24, 40, 40, 8) == pytest.approx(2.048)
    assert invert_Tc(1.85, 1, 1, 8) == pytest.approx(1.85)
    for C, pods, n in [(40, 8, 8), (12, 4, 3), (7, 7, 2)]:
        assert invert_Tc(predict_Td(C, pods, n, 1.7), C, pods, n) == pytest.approx(1.7)


def test_total_time():
    assert predict_Tt(1.85, 29.24) == pytest.approx(31.09)
    assert predict_Tt(10.24, 75.23) == pytest.approx(85.47)
    assert predict_Tt(4.2, 0) == 4.2


def test_bandwidth_per_container():
    assert avg_bandwidth_per_container(8.61, 4) == pytest.approx(2.1525)
    assert avg_bandwidth_per_container(15.10, 20) == pytest.approx(0.755)
    assert avg_bandwidth_per_container(3.0, 1) == 3.0


def test_overhead_alpha():
    assert overhead_alpha(_stats(101, 1), _stats(100, 1)) == pytest.approx(1.01)
    assert overhead_alpha(_stats(100, 1), _stats(100, 1)) == 1.0
    bw = SummaryStats.from_moments(2.0, 0.1, 30, metric="bandwidth_gb")
    with pytest.raises(UnitMismatch):
        overhead_alpha(bw, bw)
    t = as_transfer_time(bw)
    assert t.metric == "transfer_time_s" and t.mean == pytest.approx(0.5)


# -- tables ---------------------------------------------------------------------


def test_interpolation():
    t = CalibrationTable({(1, 8, 10): 2.0, (1, 8, 20): 3.0}, t_c=2.5)
    assert interpolate_Tc(t, 1, 8, 10) == 2.0
    assert interpolate_Tc(t, 1, 8, 15) == 2.5
    assert interpolate_Tc(t, 1, 8, 100) == 2.5
    assert interpolate_Tc(t, 1, 8, 1) == 2.0
    with pytest.raises(EmptyTable):
        interpolate_Tc(CalibrationTable({}), 1, 8, 10)


def test_interpolation_over_rho_and_n():
    t = CalibrationTable({(1, 4, 8): 2.0, (Fraction(1, 2), 4, 8): 1.0, (1, 8, 8): 4.0})
    assert interpolate_Tc(t, Fraction(3, 4), 4, 8) == pytest.approx(1.5)
    assert interpolate_Tc(t, 1, 6, 8) == pytest.approx(3.0)


def test_calibrate_from_deployment_series():
    rows = [(1, 1.85), (5, 2.37), (10, 3.77), (20, 5.69), (40, 10.24)]
    body = "".join(f"t2,8,{C},{C},1,deploy_time_s,{td},s\n" for C, td in rows)
    table = calibrate_Tc(loads_measurements(HEADER + body))
    assert table.entries[(Fraction(1), 8, 40)] == pytest.approx(2.048)
    # a single (rho, n) series: the asymptote is its largest-C value
    assert table.t_c == pytest.approx(2.048)
    assert calibrated_timing(table, 1, 8, 40).t1.delay == pytest.approx(2.048)


def test_calibrate_without_deployment_rows_is_empty():
    with pytest.raises(EmptyTable):
        calibrate_Tc([])


def test_calibrate_alpha_from_exec_and_bandwidth():
    body = ""
    for i in range(5):
        body += f"cpu,8,40,40,{i},exec_time_s,{100 + (i % 2)},s\n"
        body += f"cpu,8,8,40,{i},exec_time_s,{101 + (i % 2)},s\n"
    alpha = calibrate_alpha(loads_measurements(HEADER + body))
    assert alpha(Fraction(1, 5)) == pytest.approx(101.4 / 100.4)
    assert alpha(1) == 1.0
    assert alpha.measured

    body = ""
    for i in range(5):
        body += f"net,8,20,20,{i},bandwidth_gb,{2.0 + 0.01 * i},gb\n"
        body += f"net,8,4,20,{i},bandwidth_gb,{1.9 + 0.01 * i},gb\n"
    alpha_bw = calibrate_alpha(loads_measurements(HEADER + body))
    # lower bandwidth means longer transfers, so alpha > 1
    assert alpha_bw(Fraction(1, 5)) > 1


def test_overhead_factor_is_one_at_rho_one():
    with pytest.raises(ValueError):
        OverheadFactor({1: 1.2})
    assert not OverheadFactor().measured


def test_calibration_dict_round_trip():
    table = CalibrationTable({(Fraction(1, 5), 8, 40): 1.5, (1, 8, 40): 2.0}, t_c=1.9)
    alpha = OverheadFactor({Fraction(1, 5): 1.01})
    back_table, back_alpha = calibration_from_dict(calibration_to_dict(table, alpha))
    assert back_table == table
    assert back_alpha == alpha
    none_table, _ = calibration_from_dict(calibration_to_dict(None, alpha))
    assert none_table is None


def test_calibrate_returns_both_parts():
    body = "e,8,40,40,1,deploy_time_s,10.24,s\ne,8,40,40,2,deploy_time_s,10.24,s\n"
    table, alpha = calibrate(loads_measurements(HEADER + body))
    assert table.t_c == pytest.approx(2.048)
    assert not alpha.measured
