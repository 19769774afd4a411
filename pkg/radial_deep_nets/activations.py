"""
Sigmoidal activations with exact derivative calculus.

Derivatives come from closed recurrences rather than finite differences:

* logistic: φ' = φ(1 - φ), so φ^(k) is an integer polynomial in φ.
* tanh-shifted: ½(tanh t + 1) = logistic(2t), so φ^(k)(t) = 2^k σ^(k)(2t).
* arctan-shifted: φ' = 1/(π(1 + t²)), whose derivatives are rational
  functions Q_m(t) / (1 + t²)^(m+1).
* gompertz: φ = exp(-u) with u = e^(-t), so φ^(k) = B_k(u) φ with Touchard
  (Bell) polynomials B_{k+1}(u) = u (B_k(u) - B_k'(u)).
"""

import logging
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Tuple

from mpmath import mp, mpf
from pydantic import BaseModel, ConfigDict, Field, field_validator

from radial_deep_nets.config import ActivationName, config
from radial_deep_nets.exceptions import ArgumentError, SearchFailureError, UnsupportedOrderError
from radial_deep_nets.numeric_core import RealLike, precision

logger = logging.getLogger(__name__)

IntPoly = Tuple[int, ...]

THETA0_SCAN_RANGE = 3.0
THETA0_SCAN_STEP = 0.01
THETA0_REFINE_STEPS = 24
SAFETY_FACTOR = mp.mpf("1.1")


class Activation(BaseModel):
    """A named activation, optionally anchored at θ0."""
    model_config = ConfigDict(frozen=True)

    name: ActivationName = Field(default_factory=lambda: config.activation)
    theta0: Optional[str] = None
    max_derivative_order: int = Field(default_factory=lambda: config.max_derivative_order)
    scale: float = 1.0

    @field_validator("name", mode="before")
    @classmethod
    def _coerce_name(cls, value):
        if isinstance(value, str):
            return ActivationName.from_string(value)
        return value

    @field_validator("max_derivative_order")
    @classmethod
    def _check_order(cls, value: int) -> int:
        if value < 1:
            raise ValueError("max_derivative_order must be at least 1")
        return value

    @property
    def anchor(self) -> mpf:
        """θ0 at the active precision."""
        if self.theta0 is None:
            raise ArgumentError(f"activation '{self.name.value}' has no anchor θ0")
        return mp.mpf(self.theta0)

    @property
    def is_sigmoidal(self) -> bool:
        return self.name != ActivationName.IDENTITY

    def with_anchor(self, theta0: RealLike) -> "Activation":
        return self.model_copy(update={"theta0": _decimal(theta0)})

    def __call__(self, t: mpf) -> mpf:
        return eval_derivative(self, 0, t)

    def derivative(self, k: int, t: mpf) -> mpf:
        return eval_derivative(self, k, t)


class AssumptionReport(BaseModel):
    """Result of auditing an activation against the smoothness assumptions."""
    theta0: str
    min_abs_derivative: str
    tail_constant: str
    tail_exponent: float
    satisfied: bool
    violations: List[str] = Field(default_factory=list)


def _decimal(value: RealLike) -> str:
    """Decimal string that reproduces ``value`` at the active precision."""
    return mp.nstr(mp.mpf(value), max(20, int(mp.dps) + 5), strip_zeros=True)


def _poly_mul(p: IntPoly, q: IntPoly) -> IntPoly:
    out = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] += a * b
    return tuple(out)


def _poly_add(p: IntPoly, q: IntPoly) -> IntPoly:
    n = max(len(p), len(q))
    return tuple((p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0) for i in range(n))


def _poly_deriv(p: IntPoly) -> IntPoly:
    return tuple(i * p[i] for i in range(1, len(p))) or (0,)


def _poly_eval(p: IntPoly, x: mpf) -> mpf:
    acc = mp.mpf(0)
    for c in reversed(p):
        acc = acc * x + c
    return acc


@lru_cache(maxsize=None)
def _logistic_poly(k: int) -> IntPoly:
    """σ^(k) as a polynomial in σ."""
    if k == 0:
        return (0, 1)
    prev = _logistic_poly(k - 1)
    return _poly_mul(_poly_deriv(prev), (0, 1, -1))


@lru_cache(maxsize=None)
def _arctan_poly(m: int) -> IntPoly:
    """Numerator Q_m of the m-th derivative of 1/(1 + t²)."""
    if m == 0:
        return (1,)
    prev = _arctan_poly(m - 1)
    term = _poly_mul(_poly_deriv(prev), (1, 0, 1))
    return _poly_add(term, _poly_mul(prev, (0, -2 * m)))


@lru_cache(maxsize=None)
def _gompertz_poly(k: int) -> IntPoly:
    """B_k with φ^(k) = B_k(e^(-t)) φ."""
    if k == 0:
        return (1,)
    prev = _gompertz_poly(k - 1)
    diff = _poly_add(prev, tuple(-c for c in _poly_deriv(prev)))
    return _poly_mul(diff, (0, 1))


def _logistic(k: int, t: mpf) -> mpf:
    return _poly_eval(_logistic_poly(k), 1 / (1 + mp.exp(-t)))


def _tanh_shifted(k: int, t: mpf) -> mpf:
    return 2**k * _logistic(k, 2 * t)


def _arctan_shifted(k: int, t: mpf) -> mpf:
    if k == 0:
        return mp.atan(t) / mp.pi + mp.mpf(1) / 2
    return _poly_eval(_arctan_poly(k - 1), t) / (mp.pi * (1 + t * t) ** k)


def _gompertz(k: int, t: mpf) -> mpf:
    u = mp.exp(-t)
    return _poly_eval(_gompertz_poly(k), u) * mp.exp(-u)


def _identity(k: int, t: mpf) -> mpf:
    if k == 0:
        return t
    return mp.mpf(1) if k == 1 else mp.mpf(0)


_KERNELS: Dict[ActivationName, Callable[[int, mpf], mpf]] = {
    ActivationName.LOGISTIC: _logistic,
    ActivationName.TANH_SHIFTED: _tanh_shifted,
    ActivationName.ARCTAN_SHIFTED: _arctan_shifted,
    ActivationName.GOMPERTZ: _gompertz,
    ActivationName.IDENTITY: _identity,
}


def eval_derivative(act: Activation, k: int, t: RealLike) -> mpf:
    """
    Evaluate φ^(k)(t) exactly through the activation's recurrence.

    Raises:
        UnsupportedOrderError: If k exceeds ``act.max_derivative_order``
    """
    if k < 0 or k > act.max_derivative_order:
        raise UnsupportedOrderError(
            f"derivative order {k} outside [0, {act.max_derivative_order}] "
            f"for '{act.name.value}'"
        )
    value = _KERNELS[act.name](k, mp.mpf(t))
    return value * act.scale if act.scale != 1 else value


def delta_phi(act: Activation, A: RealLike) -> mpf:
    """
    Tail functional sup_{t >= A} max(|1 - φ(t)|, |φ(-t)|).

    For the monotone named activations the supremum sits at t = A.
    """
    A = mp.mpf(A)
    if A < 0:
        raise ArgumentError("delta_phi needs A >= 0")
    if not act.is_sigmoidal:
        raise ArgumentError("delta_phi is defined for sigmoidal activations only")
    return max(abs(1 - act(A)), abs(act(-A)))


def _admissible(act: Activation, s0: int, tol: mpf, theta: mpf) -> Tuple[bool, mpf]:
    smallest = min(abs(eval_derivative(act, j, theta)) for j in range(s0 + 1))
    return smallest >= tol, smallest


def find_theta0(act: Activation, s0: int, tol: RealLike) -> mpf:
    """
    Locate an anchor θ0 with |φ^(j)(θ0)| >= tol for all 0 <= j <= s0.

    Scans [-3, 3] on a 0.01 lattice ordered by |θ| (positive side first), then
    bisects towards the previous lattice point to shrink |θ0|.

    Raises:
        ArgumentError: If tol <= 0 or s0 < 1
        SearchFailureError: If no scanned point qualifies
    """
    tol = mp.mpf(tol)
    if tol <= 0:
        raise ArgumentError("tol must be positive")
    if s0 < 1:
        raise ArgumentError("s0 must be at least 1")
    if s0 > act.max_derivative_order:
        raise UnsupportedOrderError(f"s0 = {s0} exceeds max_derivative_order")

    steps = int(round(THETA0_SCAN_RANGE / THETA0_SCAN_STEP))
    best_theta, best_value = None, mp.mpf(-1)
    for i in range(steps + 1):
        for sign in ((1,) if i == 0 else (1, -1)):
            theta = sign * i * mp.mpf(THETA0_SCAN_STEP)
            ok, smallest = _admissible(act, s0, tol, theta)
            if smallest > best_value:
                best_theta, best_value = theta, smallest
            if ok:
                if i == 0:
                    return theta
                inner = (i - 1) * sign * mp.mpf(THETA0_SCAN_STEP)
                return _refine(act, s0, tol, inner, theta)
    raise SearchFailureError(
        f"no θ0 in [-3, 3] has |φ^(j)| >= {mp.nstr(tol, 5)} for j <= {s0} "
        f"(best {mp.nstr(best_value, 5)} at θ={mp.nstr(best_theta, 5)})",
        best_candidate=best_theta,
        best_value=best_value,
    )


def _refine(act: Activation, s0: int, tol: mpf, bad: mpf, good: mpf) -> mpf:
    for _ in range(THETA0_REFINE_STEPS):
        mid = (bad + good) / 2
        if _admissible(act, s0, tol, mid)[0]:
            good = mid
        else:
            bad = mid
    # Snap to a short decimal so documents carry θ0 exactly.
    snapped = mp.mpf(mp.nstr(good, 8))
    return snapped if _admissible(act, s0, tol, snapped)[0] else good


def anchored(act: Activation, s0: Optional[int] = None, tol: Optional[RealLike] = None) -> Activation:
    """Return ``act`` with θ0 chosen by ``find_theta0``."""
    s0 = config.s0 if s0 is None else s0
    tol = config.theta0_tol if tol is None else tol
    theta0 = find_theta0(act, s0, tol)
    logger.debug("Anchored %s at θ0=%s", act.name.value, mp.nstr(theta0, 10))
    return act.with_anchor(theta0)


@lru_cache(maxsize=512)
def _scan_max(act: Activation, k: int, lo: str, hi: str, count: int) -> str:
    with precision(64):
        a, b = mp.mpf(lo), mp.mpf(hi)
        step = (b - a) / (count - 1)
        top = max(abs(eval_derivative(act, k, a + i * step)) for i in range(count))
        return mp.nstr(top, 18)


def derivative_max(
    act: Activation, k: int, lo: RealLike, hi: RealLike, count: Optional[int] = None
) -> mpf:
    """
    Scan-based estimate of max |φ^(k)| on [lo, hi], inflated by a 1.1 factor.

    The scan runs at 64 bits since only a few significant digits matter.
    """
    count = count or config.derivative_scan_count
    raw = _scan_max(act, k, _decimal(lo), _decimal(hi), count)
    return mp.mpf(raw) * SAFETY_FACTOR


def hoelder_constant(act: Activation, s0: int, v0: RealLike = 1) -> mpf:
    """
    Hölder constant of φ^(s0) with exponent v0.

    With v0 = 1 this is sup|φ^(s0+1)|, scanned on [-40, 40]. For v0 < 1 the
    bound 2^(1-v0) sup|φ^(s0)|^(1-v0) sup|φ^(s0+1)|^v0 is used.
    """
    v0 = mp.mpf(v0)
    lip = derivative_max(act, s0 + 1, -40, 40)
    if v0 == 1:
        return lip
    top = derivative_max(act, s0, -40, 40)
    return 2 ** (1 - v0) * top ** (1 - v0) * lip**v0


def sup_norm(act: Activation, k: int = 0) -> mpf:
    """Scan-based sup |φ^(k)| on [-50, 50] without the safety factor."""
    return derivative_max(act, k, -50, 50, 20_001) / SAFETY_FACTOR


def validate_assumptions(act: Activation, r0: RealLike) -> AssumptionReport:
    """
    Audit boundedness, nonvanishing derivatives at θ0 and tail decay.

    Args:
        act: Activation to audit (anchored or not)
        r0: Smoothness r0 = s0 + v0 with s0 >= 2

    Returns:
        Report listing every violation found
    """
    r0 = mp.mpf(r0)
    s0 = int(mp.ceil(r0)) - 1
    violations: List[str] = []

    if s0 < 2:
        violations.append(f"smoothness r0={mp.nstr(r0, 5)} gives s0={s0} < 2")

    phi_sup = sup_norm(act, 0)
    if phi_sup > 1 + mp.mpf(10) ** -12:
        violations.append(f"‖φ‖∞ = {mp.nstr(phi_sup, 6)} exceeds 1")
    dphi_sup = sup_norm(act, 1)
    if dphi_sup > 1 + mp.mpf(10) ** -12:
        violations.append(f"‖φ′‖∞ = {mp.nstr(dphi_sup, 6)} exceeds 1")

    theta0 = None
    min_abs = mp.mpf(0)
    if act.theta0 is not None:
        theta0 = act.anchor
    else:
        try:
            theta0 = find_theta0(act, max(s0, 1), config.theta0_tol)
        except (SearchFailureError, UnsupportedOrderError) as exc:
            violations.append(f"no anchor found: {exc}")
    if theta0 is not None:
        orders = range(min(max(s0, 1), act.max_derivative_order) + 1)
        min_abs = min(abs(eval_derivative(act, j, theta0)) for j in orders)
        if min_abs == 0:
            violations.append(f"a derivative of order <= {s0} vanishes at θ0")

    tail_exponent = float("nan")
    tail_constant = mp.inf
    if act.is_sigmoidal:
        samples = [mp.mpf(10) ** (1 + mp.mpf(i) / 4) for i in range(9)]
        tails = [delta_phi(act, A) for A in samples]
        if all(v > 0 for v in tails):
            tail_exponent = _tail_exponent(samples, tails)
        else:
            tail_exponent = float("inf")
        tail_constant = max(A * v for A, v in zip(samples, tails))
        if not tail_exponent >= 0.95:
            violations.append(f"tail decays like t^-{tail_exponent:.3f}, slower than t^-1")
        if abs(act(-40)) > mp.mpf("0.05") or abs(1 - act(40)) > mp.mpf("0.05"):
            violations.append("φ is not sigmoidal on [-40, 40]")
    else:
        violations.append("activation is not sigmoidal")

    return AssumptionReport(
        theta0=_decimal(theta0) if theta0 is not None else "nan",
        min_abs_derivative=_decimal(min_abs),
        tail_constant=mp.nstr(tail_constant, 12),
        tail_exponent=tail_exponent,
        satisfied=not violations,
        violations=violations,
    )


def _tail_exponent(samples: List[mpf], tails: List[mpf]) -> float:
    """Negated log-log slope, computed in mpmath since tails underflow floats."""
    xs = [mp.log(A) for A in samples]
    ys = [mp.log(v) for v in tails]
    n = len(xs)
    mx, my = sum(xs) / n, sum(ys) / n
    slope = sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / sum((x - mx) ** 2 for x in xs)
    return float(-slope)


def get_activation(name: Optional[str] = None, **kwargs) -> Activation:
    """Build an activation by name (defaults to ``config.activation``)."""
    return Activation(name=ActivationName.from_string(name or config.activation.value), **kwargs)
