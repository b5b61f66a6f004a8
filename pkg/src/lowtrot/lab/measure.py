"""Dense-oracle measurements paired with their analytic bounds."""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .. import bounds
from ..formulas import LambdaLadder, Schedule, apply_formula
from ..formulas import ladder as build_ladder
from ..linalg import expm_i, spectral_norm
from ..spectral import effective
from .model import DenseModel, as_model
from .records import ExperimentRecord

FIT_CEILING = 0.1
FIT_FLOOR_PER_DIM = 1e-9
MIN_FIT_POINTS = 5


class DegenerateSeriesError(ValueError):
    """The error series is identically (numerically) zero; no slope exists."""


class VacuousLadderWarning(UserWarning):
    """Every ladder rung lies above the spectrum, so all projectors are the identity."""


class _Clock:
    def __init__(self, enabled: bool):
        self.enabled = enabled
        self.t0 = time.perf_counter()

    def ms(self) -> int:
        return round(1000 * (time.perf_counter() - self.t0)) if self.enabled else 0


def _record(model: DenseModel, kind: str, measured: float, bound: float, clock: _Clock, **kw) -> ExperimentRecord:
    return ExperimentRecord(
        kind=kind, model=model.name, seed=model.seed, N=model.N, dim=model.dim,
        measured=float(measured), bound=float(bound), runtime_ms=clock.ms(), **kw,
    )


def measure_leakage(model, layer: int, s: float, lo: float, hi: float, *, timing: bool = False) -> ExperimentRecord:
    """``||P_{>hi} exp(-i s H_l) P_{<=lo}||`` against the exponential leakage bound."""
    m = as_model(model)
    clock = _Clock(timing)
    bound = bounds.leakage_bound(lo, hi, s, m.params)
    u = expm_i(m.layers[layer], s)
    measured = spectral_norm(m.p_gt(hi) @ u @ m.p_le(lo))
    return _record(m, "leakage", measured, bound, clock, s=s, lambda_lo=lo, lambda_hi=hi, info={"layer": layer})


def measure_moment_leakage(model, layer: int, n: int, lo: float, hi: float, *, timing: bool = False) -> ExperimentRecord:
    """``||P_{>hi} H_l^n P_{<=lo}||`` against ``(e M J)^n exp(-lambda (hi - lo))``."""
    m = as_model(model)
    clock = _Clock(timing)
    bound = bounds.moment_leakage_bound(n, lo, hi, m.params)
    hl = m.layers[layer].matrix
    power = hl
    for _ in range(n - 1):
        power = power @ hl
    measured = spectral_norm(m.p_gt(hi) @ power @ m.p_le(lo))
    return _record(m, "moment_leakage", measured, bound, clock, lambda_lo=lo, lambda_hi=hi,
                   info={"layer": layer, "n": n})


def measure_effective_leakage(model, layer: int, s: float, lo: float, hi: float, cutoff: float,
                              which: str = "sandwiched", *, timing: bool = False) -> ExperimentRecord:
    """Leakage of evolutions under the compressed layer ``P H_l P`` (``P`` below ``cutoff``)."""
    m = as_model(model)
    if not cutoff >= hi >= lo:
        raise ValueError(f"need cutoff >= hi >= lo, got {cutoff}, {hi}, {lo}")
    clock = _Clock(timing)
    bound = bounds.effective_leakage_bound(lo, hi, s, m.params, which)
    ubar = expm_i(m.effective_layers(cutoff)[layer], s)
    if which == "sandwiched":
        diff = ubar - expm_i(m.layers[layer], s)
        measured = spectral_norm(m.p_le(hi) @ diff @ m.p_le(lo))
    else:
        measured = spectral_norm(m.p_gt(hi) @ ubar @ m.p_le(lo))
    return _record(m, "eff_leakage", measured, bound, clock, s=s, lambda_lo=lo, lambda_hi=hi,
                   delta_prime=cutoff, info={"layer": layer, "which": which})


def identity_residual(model, s: float, Delta: float, cutoff: float) -> float:
    """``||(exp(-isH) - exp(-is Hbar)) P_{<=Delta}||``, analytically zero for cutoff >= Delta."""
    m = as_model(model)
    if cutoff < Delta:
        raise ValueError("cutoff must be at least Delta")
    hbar = effective(m.H, m.eigs, cutoff).operator
    return spectral_norm((m.evolution(s) - expm_i(hbar, s)) @ m.p_le(Delta))


def _bound_inputs(m: DenseModel, schedule: Schedule, s: float, Delta: float, gamma_tilde: float) -> bounds.BoundInputs:
    return bounds.BoundInputs(m.params.with_schedule(schedule), p=schedule.order, Delta=max(0.0, Delta),
                              s=s, gamma_tilde=gamma_tilde)


def formula_errors(model, schedule: Schedule, s: float, Delta: float) -> tuple[float, float]:
    """``(||(U - W) P_{<=Delta}||, ||U - W||)`` at step ``s``."""
    m = as_model(model)
    diff = m.evolution(s) - apply_formula(schedule, s, m.layers)
    return spectral_norm(diff @ m.p_le(Delta)), spectral_norm(diff)


def measure_formula_error(model, schedule: Schedule, s: float, Delta: float, restriction: str = "low_energy",
                          *, gamma_tilde: float = 1.0, with_log_term: bool = True,
                          timing: bool = False) -> ExperimentRecord:
    """Product-formula error, on the low-energy subspace or the full space.

    The bound is ``gamma_tilde (L Delta' |s|)^(p+1)``; with the default
    ``gamma_tilde = 1`` it is a scaling proxy only.  ``info`` also carries
    the exact-identity residual at cutoff ``Delta``.
    """
    if restriction not in ("low_energy", "full"):
        raise ValueError("restriction must be 'low_energy' or 'full'")
    m = as_model(model)
    clock = _Clock(timing)
    inputs = _bound_inputs(m, schedule, s, Delta, gamma_tilde)
    if s == 0:
        bound, leak, dp = 0.0, 0.0, None
        dps = None
    else:
        bound, leak = bounds.theorem1_error_bound(inputs)
        dps = bounds.delta_prime(inputs)
        dp = dps.exact if with_log_term else dps.without_log
        if not with_log_term:
            bound = gamma_tilde * (inputs.params.L * dp * abs(s)) ** (schedule.order + 1)
    diff = m.evolution(s) - apply_formula(schedule, s, m.layers)
    if restriction == "low_energy":
        diff = diff @ m.p_le(Delta)
    measured = spectral_norm(diff)
    info = {
        "restriction": restriction,
        "Delta": Delta,
        "identity_residual": identity_residual(m, s, Delta, Delta),
        "leakage_piece": leak,
        "proxy": gamma_tilde == 1.0,
        "with_log_term": with_log_term,
    }
    if dps is not None:
        info["delta_prime_beta"] = dps.beta
    return _record(m, "formula_error", measured, bound, clock, p=schedule.order, s=s, lambda_lo=Delta,
                   delta_prime=dp, info=info)


def corollary_checks(model, schedule: Schedule, s: float, Delta: float, delta: float,
                     ldr: LambdaLadder | None = None, cutoff: float | None = None,
                     *, timing: bool = False) -> list[ExperimentRecord]:
    """All four corollary comparisons for one configuration.

    Without ``ldr`` the minimal admissible ladder for ``delta`` is built and
    the bounds are ``delta, delta, 3 delta, 5 delta``.  With an explicit
    ladder, the bounds are the per-step leakage sums, which hold for any
    ascending ladder.  ``cutoff`` defaults to the top rung.
    """
    m = as_model(model)
    clock = _Clock(timing)
    params = m.params.with_schedule(schedule)
    custom = ldr is not None
    if ldr is None:
        ldr = build_ladder(Delta, schedule, s, delta, params)
    if any(b < a for a, b in zip(ldr.values, ldr.values[1:])):
        raise ValueError("ladder must be non-decreasing")
    if cutoff is None:
        cutoff = ldr.top
    if cutoff < ldr.top:
        raise ValueError(f"cutoff {cutoff} is below the top rung {ldr.top}")
    vacuous = min(ldr.rungs) >= m.Emax
    if vacuous:
        warnings.warn(
            f"ladder starts at {min(ldr.rungs):.4g} >= max energy {m.Emax:.4g}; every projector is the identity",
            VacuousLadderWarning, stacklevel=2,
        )
    eff = m.effective_layers(cutoff)
    kw = dict(spectrum=m.eigs, ladder=ldr, cutoff=cutoff, effective_layers=eff)
    w = apply_formula(schedule, s, m.layers)
    w_l = apply_formula(schedule, s, m.layers, "projected", **kw)
    wb_l = apply_formula(schedule, s, m.layers, "projected_effective", **kw)
    wb = apply_formula(schedule, s, m.layers, "effective", **kw)
    pd = m.p_le(Delta)
    pairs = {1: w_l - w, 2: wb_l - w_l, 3: wb - wb_l, 4: wb - w}
    ident = identity_residual(m, s, Delta, cutoff)
    out = []
    for which, diff in pairs.items():
        if custom:
            bound = bounds.ladder_sum_bound(ldr, schedule, s, params, which)
        else:
            bound = bounds.corollary_bound(which, delta)
        out.append(_record(
            m, "corollary", spectral_norm(diff @ pd), bound, clock, p=schedule.order, s=s,
            delta=None if custom else delta, lambda_lo=Delta, lambda_hi=ldr.top, delta_prime=cutoff,
            info={"corollary": which, "ladder": "custom" if custom else "minimal", "vacuous": bool(vacuous),
                  "identity_residual": ident, "rungs": list(ldr.rungs)},
        ))
    return out


def corollary_check(model, schedule: Schedule, s: float, Delta: float, delta: float, which: int,
                    **kw) -> ExperimentRecord:
    if which not in (1, 2, 3, 4):
        raise ValueError("which must be 1, 2, 3 or 4")
    return corollary_checks(model, schedule, s, Delta, delta, **kw)[which - 1]


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r2: float
    window: tuple[float, float]
    points: int
    s: tuple[float, ...] = field(default=(), repr=False)
    errors: tuple[float, ...] = field(default=(), repr=False)


def fit_loglog(xs, ys, floor: float, ceiling: float = FIT_CEILING) -> FitResult:
    """Least-squares line through ``log y`` vs ``log x`` inside ``[floor, ceiling]``."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if np.all(ys <= floor):
        raise DegenerateSeriesError("degenerate series: every value is at the numerical floor")
    keep = (ys >= floor) & (ys <= ceiling)
    if keep.sum() < MIN_FIT_POINTS:
        raise ValueError(f"only {int(keep.sum())} points inside the fit window [{floor:.2e}, {ceiling}]")
    lx, ly = np.log(xs[keep]), np.log(ys[keep])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return FitResult(float(slope), float(intercept), r2, (float(xs[keep].min()), float(xs[keep].max())),
                     int(keep.sum()), tuple(xs[keep]), tuple(ys[keep]))


def order_fit(model, schedule: Schedule, s_grid, Delta: float | None = None, restriction: str = "full") -> FitResult:
    """Slope of ``log error`` against ``log s``; ``p + 1`` is expected."""
    m = as_model(model)
    s_grid = [float(x) for x in s_grid]
    if len(s_grid) < MIN_FIT_POINTS:
        raise ValueError(f"need at least {MIN_FIT_POINTS} step sizes")
    if restriction == "low_energy" and Delta is None:
        raise ValueError("low-energy fits need Delta")
    errs = []
    for s in s_grid:
        low, full = formula_errors(m, schedule, s, Delta if Delta is not None else m.Emax)
        errs.append(low if restriction == "low_energy" else full)
    return fit_loglog(s_grid, errs, FIT_FLOOR_PER_DIM * m.dim)


def order_fit_record(model, schedule: Schedule, s_grid, Delta: float | None = None, restriction: str = "full",
                     tol: float = 0.15, reference: float | None = None) -> tuple[ExperimentRecord, FitResult]:
    """Order fit as a record.

    Without ``reference``: ``measured = |slope - (p+1)|``.  With a reference
    slope (the full-space fit): ``measured = reference - slope``, a one-sided
    check.  ``bound = tol`` either way, compared without dimension slack.
    """
    m = as_model(model)
    fit = order_fit(m, schedule, s_grid, Delta, restriction)
    if reference is None:
        measured = abs(fit.slope - (schedule.order + 1))
    else:
        measured = reference - fit.slope
    rec = _record(m, "order_fit", measured, tol, _Clock(False), p=schedule.order, lambda_lo=Delta,
                  info={"slope": fit.slope, "intercept": fit.intercept, "r2": fit.r2, "window": list(fit.window),
                        "points": fit.points, "restriction": restriction, "reference": reference})
    rec.dim = 0
    return rec, fit
