"""
Exchange between polynomials and shallow nets.

A leading monomial u_k t^k is traded for one neuron
u_k k! / (μ_k^k φ^(k)(θ0)) · φ(μ_k t + θ0) whose Taylor expansion at θ0
reproduces it; the lower-order part of that expansion is pushed into the
remainder polynomial. Iterating from the top degree down converts any
polynomial of degree <= s0 into a shallow net, and the square net obtained for
t² gives the three-term product gate.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

from mpmath import mp, mpf

from radial_deep_nets.activations import Activation, derivative_max, hoelder_constant
from radial_deep_nets.config import config
from radial_deep_nets.exceptions import ArgumentError, UnsupportedOrderError
from radial_deep_nets.numeric_core import RealLike, current_precision, quadrature

logger = logging.getLogger(__name__)

Term = Tuple[mpf, mpf, mpf]
DerivativeOracle = Callable[[int, mpf], mpf]


@dataclass(frozen=True)
class Poly:
    """Polynomial Σ u_i t^i with ascending coefficients and no trailing zeros."""
    coeffs: Tuple[mpf, ...] = ()

    def __post_init__(self):
        coeffs = [mp.mpf(c) for c in self.coeffs]
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        object.__setattr__(self, "coeffs", tuple(coeffs))

    @classmethod
    def of(cls, coeffs: Iterable[RealLike]) -> "Poly":
        return cls(tuple(mp.mpf(c) for c in coeffs))

    @property
    def degree(self) -> int:
        """Degree, or -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def leading(self) -> mpf:
        if self.is_zero:
            raise ArgumentError("zero polynomial has no leading coefficient")
        return self.coeffs[-1]

    def __call__(self, t: RealLike) -> mpf:
        t = mp.mpf(t)
        acc = mp.mpf(0)
        for c in reversed(self.coeffs):
            acc = acc * t + c
        return acc

    def strip(self, threshold: RealLike) -> "Poly":
        """Zero every coefficient with |u| < threshold."""
        threshold = mp.mpf(threshold)
        return Poly(tuple(c if abs(c) >= threshold else mp.mpf(0) for c in self.coeffs))


@dataclass(frozen=True)
class ShallowNet1D:
    """One-input shallow net Σ a·φ(w·t + θ)."""
    act: Activation
    terms: Tuple[Term, ...] = field(default_factory=tuple)
    precision_bits: int = field(default_factory=current_precision)

    def __call__(self, t: RealLike) -> mpf:
        t = mp.mpf(t)
        total = mp.mpf(0)
        for a, w, theta in self.terms:
            if a:
                total += a * self.act(w * t + theta)
        return total

    def __len__(self) -> int:
        return len(self.terms)

    def max_abs_coefficient(self) -> mpf:
        return max((abs(a) for a, _, _ in self.terms), default=mp.mpf(0))

    def padded(self, count: int) -> "ShallowNet1D":
        """Append zero-coefficient neurons up to ``count`` terms."""
        if count < len(self.terms):
            raise ArgumentError(f"cannot pad {len(self.terms)} terms down to {count}")
        filler = (mp.mpf(0), mp.mpf(1), self.act.anchor)
        return ShallowNet1D(
            self.act, self.terms + (filler,) * (count - len(self.terms)), self.precision_bits
        )


@dataclass(frozen=True)
class ProductGate:
    """U·U′ ≈ 2·h3((U+U′)/2) − h3(U)/2 − h3(U′)/2 for U, U′ in [−1, 1]."""
    h3: ShallowNet1D
    eps: mpf

    def combine(self, u: RealLike, v: RealLike) -> mpf:
        u, v = mp.mpf(u), mp.mpf(v)
        return 2 * self.h3((u + v) / 2) - self.h3(u) / 2 - self.h3(v) / 2

    __call__ = combine


def _check_eps(eps: mpf) -> None:
    if not 0 < eps < 1:
        raise ArgumentError(f"eps must lie in (0, 1), got {mp.nstr(eps, 6)}")


def mu_k(
    act: Activation,
    theta0: Optional[RealLike],
    k: int,
    u_k: RealLike,
    eps: RealLike,
    s0: Optional[int] = None,
    v0: RealLike = 1,
    c0: Optional[RealLike] = None,
) -> mpf:
    """
    Inner scale for trading u_k t^k against one neuron with error <= eps.

    For k < s0 the Taylor remainder is controlled by max|φ^(k+1)| on
    [θ0 − 1, θ0 + 1]; for k = s0 by the Hölder constant c0 of φ^(s0).

    Raises:
        UnsupportedOrderError: If k > s0
        ArgumentError: If u_k = 0, k < 0 or eps is outside (0, 1)
    """
    s0 = config.s0 if s0 is None else s0
    theta0 = act.anchor if theta0 is None else mp.mpf(theta0)
    u_k, eps, v0 = mp.mpf(u_k), mp.mpf(eps), mp.mpf(v0)
    if k > s0:
        raise UnsupportedOrderError(f"degree {k} exceeds smoothness order s0={s0}")
    if k < 0:
        raise ArgumentError("k must be non-negative")
    if u_k == 0:
        raise ArgumentError("u_k must be nonzero")
    _check_eps(eps)

    phi_k = abs(act.derivative(k, theta0))
    if k < s0:
        top = derivative_max(act, k + 1, theta0 - 1, theta0 + 1)
        mu = eps * phi_k * (k + 1) / (abs(u_k) * top)
    else:
        c0 = hoelder_constant(act, s0, v0) if c0 is None else mp.mpf(c0)
        base = (
            eps * phi_k * mp.gamma(s0 + v0 + 1)
            / (mp.factorial(s0) * mp.gamma(v0 + 1) * c0 * abs(u_k))
        )
        mu = base ** (1 / v0)
    return min(mp.mpf(1), mu)


def replace_leading(
    p: Poly,
    act: Activation,
    theta0: Optional[RealLike],
    eps: RealLike,
    s0: Optional[int] = None,
    v0: RealLike = 1,
    c0: Optional[RealLike] = None,
) -> Tuple[Term, Poly]:
    """
    Replace the leading monomial of ``p`` by a single neuron.

    Returns:
        The neuron (a, μ_k, θ0) and the degree k−1 remainder polynomial, with
        |p(t) − a·φ(μ_k t + θ0) − remainder(t)| <= eps on [−1, 1]

    Raises:
        ArgumentError: If ``p`` is zero
    """
    if p.is_zero:
        raise ArgumentError("cannot replace the leading term of the zero polynomial")
    theta0 = act.anchor if theta0 is None else mp.mpf(theta0)
    k = p.degree
    u_k = p.leading()
    mu = mu_k(act, theta0, k, u_k, eps, s0=s0, v0=v0, c0=c0)
    phi_k = act.derivative(k, theta0)
    a = u_k * mp.factorial(k) / (mu**k * phi_k)
    remainder = [
        p.coeffs[i]
        - u_k * mp.factorial(k) * act.derivative(i, theta0)
        / (phi_k * mu ** (k - i) * mp.factorial(i))
        for i in range(k)
    ]
    return (a, mu, theta0), Poly(tuple(remainder))


def poly_to_shallow(
    p: Poly,
    act: Activation,
    theta0: Optional[RealLike],
    eps: RealLike,
    s0: Optional[int] = None,
    v0: RealLike = 1,
    c0: Optional[RealLike] = None,
) -> ShallowNet1D:
    """
    Convert a polynomial of degree k <= s0 into a (k+1)-term shallow net.

    Each of the k+1 replacement steps spends eps/(k+1). Degrees that vanish
    along the way get a zero-coefficient neuron, so the term count is always
    k+1. Coefficients below 2^(-precision/2) are treated as zero.

    Raises:
        UnsupportedOrderError: If the degree exceeds s0
    """
    s0 = config.s0 if s0 is None else s0
    theta0 = act.anchor if theta0 is None else mp.mpf(theta0)
    eps = mp.mpf(eps)
    _check_eps(eps)
    threshold = mp.mpf(2) ** (-(mp.prec // 2))
    current = p.strip(threshold)
    k = current.degree
    if k > s0:
        raise UnsupportedOrderError(f"degree {k} exceeds smoothness order s0={s0}")
    if k < 0:
        return ShallowNet1D(act.with_anchor(theta0), ())

    if c0 is None and k == s0:
        c0 = hoelder_constant(act, s0, v0)
    step_eps = eps / (k + 1)
    terms: List[Term] = []
    for degree in range(k, -1, -1):
        if current.degree == degree:
            neuron, current = replace_leading(current, act, theta0, step_eps, s0, v0, c0)
            terms.append(neuron)
            current = current.strip(threshold)
        else:
            terms.append((mp.mpf(0), mp.mpf(1), theta0))
    return ShallowNet1D(act.with_anchor(theta0), tuple(terms))


def make_product_gate(
    act: Activation,
    theta0: Optional[RealLike],
    eps: RealLike,
    s0: Optional[int] = None,
    v0: RealLike = 1,
) -> ProductGate:
    """
    Build the product gate at accuracy eps on [−1, 1]².

    Raises:
        UnsupportedOrderError: If s0 < 2
    """
    s0 = config.s0 if s0 is None else s0
    if s0 < 2:
        raise UnsupportedOrderError("the product gate needs s0 >= 2")
    eps = mp.mpf(eps)
    h3 = poly_to_shallow(Poly.of([0, 0, 1]), act, theta0, eps / 3, s0=s0, v0=v0)
    logger.debug("Product gate at eps=%s, max |a|=%s", mp.nstr(eps, 5),
                 mp.nstr(h3.max_abs_coefficient(), 5))
    return ProductGate(h3=h3, eps=eps)


def taylor_polynomial(psi: DerivativeOracle, ell: int, t0: RealLike, t: RealLike) -> mpf:
    """Σ_{i <= ℓ} ψ^(i)(t0)(t − t0)^i / i!."""
    t0, t = mp.mpf(t0), mp.mpf(t)
    return sum(
        (psi(i, t0) * (t - t0) ** i / mp.factorial(i) for i in range(ell + 1)),
        mp.mpf(0),
    )


def taylor_remainder(
    psi: DerivativeOracle,
    ell: int,
    t0: RealLike,
    t: RealLike,
    n_panels: Optional[int] = None,
) -> mpf:
    """
    Integral-form remainder r_ℓ(t) of the order-ℓ Taylor expansion at t0.

    r_ℓ(t) = 1/(ℓ−1)! ∫_{t0}^{t} [ψ^(ℓ)(u) − ψ^(ℓ)(t0)] (t − u)^(ℓ−1) du, so
    that ψ(t) = taylor_polynomial(ψ, ℓ, t0, t) + r_ℓ(t).

    Args:
        psi: Derivative oracle psi(i, u) = ψ^(i)(u)

    Raises:
        ArgumentError: If ℓ < 1
        UnsupportedOrderError: If ψ^(ℓ) is unavailable
    """
    if ell < 1:
        raise ArgumentError("ℓ must be at least 1")
    t0, t = mp.mpf(t0), mp.mpf(t)
    try:
        anchor = psi(ell, t0)
    except (NotImplementedError, KeyError, IndexError) as exc:
        raise UnsupportedOrderError(f"ψ has no derivative of order {ell}") from exc

    def integrand(u: mpf) -> mpf:
        return (psi(ell, u) - anchor) * (t - u) ** (ell - 1)

    return quadrature(integrand, t0, t, n_panels) / mp.factorial(ell - 1)


def polynomial_oracle(coeffs: Sequence[RealLike]) -> DerivativeOracle:
    """Derivative oracle for a polynomial given by ascending coefficients."""
    base = [mp.mpf(c) for c in coeffs]

    def psi(i: int, u: mpf) -> mpf:
        total = mp.mpf(0)
        for power in range(i, len(base)):
            total += base[power] * mp.ff(power, i) * mp.mpf(u) ** (power - i)
        return total

    return psi
