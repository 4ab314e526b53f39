"""Choosing rho: group containers into few pods (Rule 1) or isolate them (Rule 2).

Rule 1 deploys n pods of ceil(C/n) containers (rho = n/C); Rule 2 gives every
container its own pod (rho = 1).  CPU- and I/O-bound work follows Rule 1
whenever there are more containers than machines.  Network-bound work
prefers Rule 2 unless deployment time matters, in which case the two
candidates are compared through

    T_c(1) - T_c(n/C) < n (alpha - 1) / C * T_e        (Rule 2 wins)

with alpha taken constant at rho = n/C.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .calibration.table import CalibrationTable, EmptyTable, OverheadFactor, interpolate_Tc

KINDS = ("CpuIntensive", "IoIntensive", "NetworkIntensive")
_KIND_ALIASES = {"cpu": "CpuIntensive", "io": "IoIntensive", "network": "NetworkIntensive", "net": "NetworkIntensive"}

DEFAULT_ALPHA = 1.01
DEFAULT_NEGLIGIBLE_FRACTION = 0.01


class MissingCalibration(LookupError):
    """The network branch needs T_c values the calibration cannot provide."""


@dataclass(frozen=True)
class AppProfile:
    kind: str
    is_service: bool = False
    # None: decide from the calibration (T_d at rho = 1 below 1% of T_e)
    deployment_negligible: bool | None = None

    def __post_init__(self):
        kind = _KIND_ALIASES.get(str(self.kind).lower(), self.kind)
        if kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        object.__setattr__(self, "kind", kind)


@dataclass(frozen=True)
class PlanInput:
    C: int
    n: int
    profile: AppProfile
    Te_s: float
    calibration: CalibrationTable | None = None
    alpha_fn: OverheadFactor | None = None
    negligible_fraction: float = DEFAULT_NEGLIGIBLE_FRACTION

    def __post_init__(self):
        if self.C < 1 or self.n < 1:
            raise ValueError("C and n must be >= 1")
        if not self.Te_s >= 0:
            raise ValueError("Te_s must be >= 0")


@dataclass(frozen=True)
class PlanRecommendation:
    rho: Fraction
    pods: int
    containers_per_pod: int
    rule: str
    predicted_Tt_s: float | None
    decision_trace: tuple[str, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "rho": {"pods": self.pods, "containers_per_pod": self.containers_per_pod},
            "rho_value": str(self.rho),
            "rule": self.rule,
            "predicted_Tt_s": self.predicted_Tt_s,
            "decision_trace": list(self.decision_trace),
        }


def rule1_layout(C: int, n: int) -> tuple[int, int]:
    """(pods, containers_per_pod) for about one pod per machine."""
    per_pod = math.ceil(C / n)
    return math.ceil(C / per_pod), per_pod


def eq1_holds(Tc_rho1: float, Tc_rho_nc: float, n: int, C: int, alpha: float, Te_s: float) -> bool:
    """True when isolating every container (rho = 1) beats rho = n/C."""
    return Tc_rho1 - Tc_rho_nc < n * (alpha - 1) / C * Te_s


def crossover_Te(Tc_rho1: float, Tc_rho_nc: float, n: int, C: int, alpha: float) -> float:
    """T_e above which Rule 2 wins (inf when alpha = 1)."""
    if alpha == 1:
        return math.inf
    return C * (Tc_rho1 - Tc_rho_nc) / (n * (alpha - 1))


def _alpha_at(inp: PlanInput, rho: Fraction) -> tuple[float, str]:
    if rho == 1:
        return 1.0, "definition"
    if inp.alpha_fn is not None and inp.alpha_fn.measured:
        return inp.alpha_fn(rho), "calibration"
    return DEFAULT_ALPHA, "default"


def _Tc(inp: PlanInput, rho: Fraction) -> float:
    if inp.calibration is None:
        raise MissingCalibration("no calibration table given")
    try:
        return interpolate_Tc(inp.calibration, rho, inp.n, inp.C)
    except EmptyTable:
        raise MissingCalibration("calibration table is empty") from None


def _rule1_rho(inp: PlanInput) -> Fraction:
    return Fraction(min(inp.n, inp.C), inp.C)


def predict_total(rho, inp: PlanInput) -> float:
    """(C/n) T_c(rho) + alpha(rho) T_e, for layouts with at least n pods."""
    rho = Fraction(rho)
    return inp.C / inp.n * _Tc(inp, rho) + _alpha_at(inp, rho)[0] * inp.Te_s


def _finish(inp: PlanInput, rule: str, trace: list[str]) -> PlanRecommendation:
    if rule == "Rule1":
        pods, per_pod = rule1_layout(inp.C, inp.n)
    else:
        pods, per_pod = inp.C, 1
    rho = Fraction(pods, inp.C)
    try:
        predicted = predict_total(rho, inp)
        trace.append(f"predicted T_t(rho={rho}) = {predicted:.6g} s")
    except MissingCalibration:
        predicted = None
        trace.append("no calibration: T_t not predicted")
    trace.append(f"{rule}: {pods} pods x {per_pod} containers (rho = {rho})")
    return PlanRecommendation(rho, pods, per_pod, rule, predicted, tuple(trace))


def recommend(inp: PlanInput) -> PlanRecommendation:
    C, n = inp.C, inp.n
    trace = [f"profile: {inp.profile.kind}, service={inp.profile.is_service}", f"C = {C}, n = {n}"]
    if inp.profile.kind in ("CpuIntensive", "IoIntensive"):
        if C > n:
            trace.append("CPU/IO bound and C > n: group containers, one pod per machine")
            return _finish(inp, "Rule1", trace)
        trace.append("CPU/IO bound and C <= n: one container per pod")
        return _finish(inp, "Rule2", trace)

    negligible = inp.profile.deployment_negligible
    if negligible is None:
        Td1 = C * _Tc(inp, Fraction(1)) / min(C, n)
        limit = inp.negligible_fraction * inp.Te_s
        negligible = Td1 < limit
        trace.append(f"T_d(rho=1) = {Td1:.6g} s vs {inp.negligible_fraction:g} * T_e = {limit:.6g} s")
    else:
        trace.append("deployment time declared " + ("negligible" if negligible else "relevant"))
    if negligible:
        trace.append("network bound with negligible T_d: one container per pod")
        return _finish(inp, "Rule2", trace)
    if C <= n:
        trace.append("network bound and C <= n: rho = n/C would exceed 1, one container per pod")
        return _finish(inp, "Rule2", trace)

    rho_nc = _rule1_rho(inp)
    Tc1, Tcnc = _Tc(inp, Fraction(1)), _Tc(inp, rho_nc)
    alpha, source = _alpha_at(inp, rho_nc)
    lhs = Tc1 - Tcnc
    rhs = n * (alpha - 1) / C * inp.Te_s
    holds = eq1_holds(Tc1, Tcnc, n, C, alpha, inp.Te_s)
    trace.append(
        f"rho = 1 vs n/C comparison: T_c(1) = {Tc1:.6g}, T_c({rho_nc}) = {Tcnc:.6g}, "
        f"alpha = {alpha:.6g} ({source}), T_e = {inp.Te_s:.6g}"
    )
    trace.append(f"lhs = {lhs:.6g} {'<' if holds else '>='} rhs = {rhs:.6g}")
    return _finish(inp, "Rule2" if holds else "Rule1", trace)


def plan_input_from_dict(raw: dict, calibration: CalibrationTable | None = None, alpha_fn=None) -> PlanInput:
    """Build a PlanInput from a plan config object (calibration passed separately)."""
    prof = raw.get("profile", {})
    if isinstance(prof, str):
        prof = {"kind": prof}
    profile = AppProfile(
        kind=prof.get("kind", ""),
        is_service=bool(prof.get("is_service", False)),
        deployment_negligible=prof.get("deployment_negligible"),
    )
    return PlanInput(
        C=int(raw["C"]),
        n=int(raw["n"]),
        profile=profile,
        Te_s=float(raw.get("Te_s", 0.0)),
        calibration=calibration,
        alpha_fn=alpha_fn,
        negligible_fraction=float(raw.get("negligible_fraction", DEFAULT_NEGLIGIBLE_FRACTION)),
    )
