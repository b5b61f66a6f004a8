"""Closed-form analytic bounds for low-energy product formulas.

All logarithms are natural.  ``params.lam`` is ``1/(2 J d k)`` and
``params.alpha`` is ``e J``; ``alpha_prime = kappa * alpha`` where ``kappa``
is the schedule weight per layer.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import asdict, dataclass

from .formulas import LambdaLadder, Schedule
from .hamiltonian import HamiltonianSpec, SystemParams

# Factor on the per-step leakage for each corollary (1, 2, 3) and the
# triangle-inequality total (4).
COROLLARY_FACTORS = {1: 1.0, 2: 1.0, 3: 3.0, 4: 5.0}


def _check_order(lo: float, hi: float) -> None:
    if hi < lo:
        raise ValueError(f"upper threshold {hi} is below lower threshold {lo}")


def leakage_bound(lo: float, hi: float, s: float, params: SystemParams) -> float:
    """Upper bound on ``||P_{>hi} exp(-i s H_l) P_{<=lo}||``."""
    _check_order(lo, hi)
    return math.exp(-params.lam * (hi - lo)) * math.expm1(params.alpha * abs(s) * params.M)


def moment_leakage_bound(n: int, lo: float, hi: float, params: SystemParams) -> float:
    """Upper bound ``(e M J)^n exp(-lambda (hi - lo))`` on ``||P_{>hi} H_l^n P_{<=lo}||``."""
    if n < 1:
        raise ValueError("moment order n must be >= 1")
    _check_order(lo, hi)
    return (math.e * params.M * params.J) ** n * math.exp(-params.lam * (hi - lo))


def effective_leakage_bound(lo: float, hi: float, s: float, params: SystemParams, which: str = "sandwiched") -> float:
    """Bounds on the effective-evolution leakage.

    ``sandwiched``: ``||P_{<=hi} (exp(-isHbar_l) - exp(-isH_l)) P_{<=lo}||``
    ``projected``:  ``||P_{>hi} exp(-isHbar_l) P_{<=lo}||`` (three times larger)
    """
    base = leakage_bound(lo, hi, s, params)
    if which == "sandwiched":
        return base
    if which == "projected":
        return 3.0 * base
    raise ValueError("which must be 'sandwiched' or 'projected'")


def corollary_bound(which: int, delta: float) -> float:
    if which not in COROLLARY_FACTORS:
        raise ValueError("corollary must be 1, 2, 3 or 4")
    return COROLLARY_FACTORS[which] * delta


def ladder_sum_bound(ldr: LambdaLadder, schedule: Schedule, s: float, params: SystemParams, which: int) -> float:
    """Per-step leakage sum behind each corollary, valid for any ladder.

    For the minimal admissible ladder every summand is below ``delta/q``, so
    this never exceeds :func:`corollary_bound`.
    """
    if which not in COROLLARY_FACTORS:
        raise ValueError("corollary must be 1, 2, 3 or 4")
    v = ldr.values
    total = sum(leakage_bound(v[j], v[j + 1], c * s, params) for j, (_, c) in enumerate(schedule.steps))
    return COROLLARY_FACTORS[which] * total


@dataclass(frozen=True)
class BoundInputs:
    params: SystemParams
    p: int
    Delta: float = 0.0
    s: float = 0.0
    t: float = 1.0
    eps: float = 1e-3
    delta: float = 1e-2
    gamma_tilde: float = 1.0

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("order p must be >= 1")
        if self.Delta < 0:
            raise ValueError("Delta must be non-negative")
        if self.gamma_tilde <= 0:
            raise ValueError("gamma_tilde must be positive")


@dataclass(frozen=True)
class DeltaPrime:
    exact: float
    beta: float
    betas: tuple[float, float, float]
    without_log: float


def _check_step(inputs: BoundInputs) -> float:
    js = inputs.params.J * abs(inputs.s)
    if js == 0 or js > 1 + 1e-15:
        raise ValueError(f"need 0 < J|s| <= 1, got J|s| = {js}")
    return min(js, 1.0)


def _delta_prime_exact(Delta: float, s: float, p: int, params: SystemParams, log_term: bool = True) -> float:
    lam, q = params.lam, params.q
    val = Delta + params.alpha_prime * abs(s) * params.M * params.L / lam + (q / lam) * math.log(q)
    if log_term:
        val += (q / lam) * (p + 1) * math.log(1.0 / min(1.0, params.J * abs(s)))
    return val


def delta_prime(inputs: BoundInputs) -> DeltaPrime:
    """Effective low-energy norm chosen so the leakage term equals ``(J|s|)^(p+1)``.

    ``beta`` is the looser three-constant form using ``beta3 = 2 e k d^2 kappa``;
    ``exact <= beta`` whenever ``M L <= d N``.
    """
    js = _check_step(inputs)
    P, p = inputs.params, inputs.p
    exact = _delta_prime_exact(inputs.Delta, inputs.s, p, P)
    b1 = 2.0 * P.q * P.d * P.k * (p + 1)
    b2 = P.q ** (1.0 / (p + 1))
    b3 = 2.0 * math.e * P.k * P.d ** 2 * P.kappa
    beta = inputs.Delta + b1 * P.J * math.log(b2 / js) + b3 * P.J ** 2 * P.N * abs(inputs.s)
    return DeltaPrime(exact, beta, (b1, b2, b3), _delta_prime_exact(inputs.Delta, inputs.s, p, P, log_term=False))


def leakage_of_delta_prime(dp: float, inputs: BoundInputs) -> float:
    """Leakage contribution ``delta(Delta')`` for an arbitrary ``Delta'``."""
    P = inputs.params
    expo = P.lam * (dp - inputs.Delta) - P.alpha_prime * abs(inputs.s) * P.M * P.L - P.q * math.log(P.q)
    return math.exp(-expo / P.q)


def theorem1_error_bound(inputs: BoundInputs) -> tuple[float, float]:
    """``(gamma_tilde (L Delta' |s|)^(p+1), (J|s|)^(p+1))``.

    The second value is the leakage piece at the chosen ``Delta'``.
    ``s = 0`` returns ``(0, 0)``.
    """
    if inputs.s == 0:
        return 0.0, 0.0
    dp = delta_prime(inputs).exact
    p = inputs.p
    bound = inputs.gamma_tilde * (inputs.params.L * dp * abs(inputs.s)) ** (p + 1)
    return bound, (inputs.params.J * abs(inputs.s)) ** (p + 1)


# --- Trotter number planning ------------------------------------------------


@dataclass(frozen=True)
class FDiagnostics:
    z_max: float
    f_max: float
    z1_prime: float
    binding: bool


def f_value(z: float, p: int) -> float:
    if z <= 0:
        return 0.0
    return math.log(1.0 / z) ** (p + 1) * z ** p


def f_diagnostics(p: int, X: float) -> FDiagnostics:
    """Shape of ``f(z) = log(1/z)^(p+1) z^p`` on ``[0, 1]`` against level ``X``.

    ``binding`` is false when ``X`` reaches the maximum of ``f``; otherwise
    ``z1_prime`` is an admissible step with ``f(z1_prime) <= X``.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    z_m = math.exp(-(p + 1) / p)
    f_m = ((1.0 + 1.0 / p) / math.e) ** (p + 1)
    if X >= f_m:
        return FDiagnostics(z_m, f_m, 1.0, False)
    if X <= 0:
        return FDiagnostics(z_m, f_m, 0.0, True)
    z1 = X ** (1.0 / p) / (math.e ** 2 * math.log(math.e ** 2 / X)) ** ((p + 1) / p)
    return FDiagnostics(z_m, f_m, z1, True)


@dataclass(frozen=True)
class PlanResult:
    r: int
    s_star: float
    binding: str
    pieces: dict
    r_prior: int | None = None
    norms: tuple[float, float] | None = None
    r_grouped: int | None = None
    proxy: bool = True

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pieces"] = {k: (None if math.isinf(v) else v) for k, v in self.pieces.items()}
        return d


def step_conditions(inputs: BoundInputs) -> dict[str, float]:
    """The four step-size conditions ``s1..s4`` plus the ``J s <= 1`` cap."""
    P, p, t, eps, g = inputs.params, inputs.p, inputs.t, inputs.eps, inputs.gamma_tilde
    if not t > 0:
        raise ValueError("t must be positive")
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    lam, L, q, M = P.lam, P.L, P.q, P.M
    ratio = eps / (2.0 * g * t)
    s1 = math.inf if inputs.Delta == 0 else ratio ** (1.0 / p) / (4.0 * L * inputs.Delta) ** (1.0 + 1.0 / p)
    s2 = ratio ** (1.0 / (2 * p + 1)) * (lam / (4.0 * P.alpha_prime * M * L ** 2)) ** (0.5 + 1.0 / (4 * p + 2))
    logq = math.log(q)
    s3 = math.inf if logq == 0 else ratio ** (1.0 / p) * (lam / (4.0 * L * q * logq)) ** (1.0 + 1.0 / p)
    X = ratio * (lam / (4.0 * L * q * (p + 1))) ** (p + 1) * P.J ** p
    fd = f_diagnostics(p, X)
    s4 = fd.z1_prime / P.J if fd.binding else math.inf
    return {"J": 1.0 / P.J, "s1": s1, "s2": s2, "s3": s3, "s4": s4}


def trotter_number(inputs: BoundInputs) -> PlanResult:
    """Trotter number ``r = ceil(t / s*)`` with ``s* = min(1/J, s1..s4)``."""
    pieces = step_conditions(inputs)
    binding = min(pieces, key=pieces.get)
    s_star = pieces[binding]
    r = max(1, math.ceil(inputs.t / s_star))
    return PlanResult(r=r, s_star=s_star, binding=binding, pieces=pieces, proxy=inputs.gamma_tilde == 1.0)


def grouped_trotter_number(inputs: BoundInputs) -> int:
    """Two-term form ``(t(Delta+J))^(1+1/p)/eps^(1/p) + (tJ sqrt N)^(1+1/(2p+1))/eps^(1/(2p+1))``."""
    P, p, t, eps = inputs.params, inputs.p, inputs.t, inputs.eps
    first = (t * (inputs.Delta + P.J)) ** (1 + 1 / p) / eps ** (1 / p)
    second = (t * P.J * math.sqrt(P.N)) ** (1 + 1 / (2 * p + 1)) / eps ** (1 / (2 * p + 1))
    return max(1, math.ceil(first + second))


def certificate(inputs: BoundInputs, s: float) -> tuple[float, float]:
    """``(gamma_tilde (L Delta'(s) s)^(p+1), eps s / (2 t))`` for step ``s``."""
    P = inputs.params
    dp = _delta_prime_exact(inputs.Delta, s, inputs.p, P)
    lhs = inputs.gamma_tilde * (P.L * dp * s) ** (inputs.p + 1)
    return lhs, inputs.eps * s / (2.0 * inputs.t)


# --- comparison with the general-case bound ---------------------------------


def one_norm(spec: HamiltonianSpec) -> float:
    """Sum of local term strengths."""
    return float(sum(spec.term_strengths()))


def induced_one_norm(spec: HamiltonianSpec) -> float:
    """Max over sites of the summed strengths of the terms touching it."""
    per_site = [0.0] * spec.n_sites
    for t, w in zip(spec.terms, spec.term_strengths()):
        for s in t.sites:
            per_site[s] += w
    return max(per_site)


def prior_from_norms(one: float, induced: float, t: float, eps: float, p: int) -> int:
    """General-case Trotter number with unit constant (a scaling proxy)."""
    if not t > 0 or not 0 < eps <= 1:
        raise ValueError("need t > 0 and eps in (0, 1]")
    return max(1, math.ceil(t ** (1 + 1 / p) / eps ** (1 / p) * induced * one ** (1 / p)))


def prior_trotter_number(spec: HamiltonianSpec, t: float, eps: float, p: int, params: SystemParams | None = None) -> tuple[int, float, float]:
    one, ind = one_norm(spec), induced_one_norm(spec)
    if params is not None:
        tol = 1e-9 * max(1.0, params.J)
        if ind > params.d * params.J + tol:
            raise AssertionError(f"induced 1-norm {ind} exceeds d J = {params.d * params.J}")
        if one > params.J * params.M * params.L + tol:
            raise AssertionError(f"1-norm {one} exceeds J M L = {params.J * params.M * params.L}")
    return prior_from_norms(one, ind, t, eps, p), one, ind


def taylor_reference(t: float, J: float, N: int) -> float:
    """Quoted truncated-Taylor cost scaling ``tau N^2`` (log factors dropped)."""
    return abs(t) * J * N ** 2


def crossover_time(low: Callable[[float], float], prior: Callable[[float], float], t_lo: float, t_hi: float, iters: int = 200) -> float | None:
    """Bisect (in log t) for the time where ``low(t) == prior(t)``.

    Returns ``None`` when the sign of ``low - prior`` does not change on the
    bracket.
    """
    def g(t):
        return math.log(low(t)) - math.log(prior(t))

    a, b = math.log(t_lo), math.log(t_hi)
    ga, gb = g(t_lo), g(t_hi)
    if ga == 0:
        return t_lo
    if ga * gb > 0:
        return None
    for _ in range(iters):
        m = 0.5 * (a + b)
        gm = g(math.exp(m))
        if gm == 0:
            return math.exp(m)
        if (gm > 0) == (ga > 0):
            a, ga = m, gm
        else:
            b = m
    return math.exp(0.5 * (a + b))
