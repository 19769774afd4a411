"""
Four-level deep nets for radial targets f(x) = g*(|x|²) on the unit ball.

The construction stacks three stages:

1. h_3d(x) = Σ_ℓ h_3(x^(ℓ))/2 approximates |x|²/2 with the square net h_3.
2. h_6,d re-expresses h_3d through a two-neuron identity net so that every
   level of the tree uses the same activation φ. Its six second-level nodes
   are indexed by (k, k') with k over the square-net neurons and k' over the
   identity-net neurons.
3. The univariate net for g(τ) = g*(2τ) on [0, 1/2] reads τ = h_6,d(x).

The result is a tree with widths (d, 6, s+3, 9(n+1)).
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from mpmath import mp, mpf
from pydantic import BaseModel, Field

from radial_deep_nets.activations import Activation
from radial_deep_nets.config import CascadeBranch, config
from radial_deep_nets.exceptions import ArgumentError
from radial_deep_nets.numeric_core import RealLike, current_precision, ensure_same_precision, make_rng, precision
from radial_deep_nets.poly_bridge import Poly, ShallowNet1D, poly_to_shallow
from radial_deep_nets.tree_net import (
    BoundedClassSpec,
    BoundCheck,
    TreeArch,
    TreeNet,
    check_bounds,
    eval_float,
    evaluate,
    fast_path_allowed,
    max_abs_weight,
    param_count,
)
from radial_deep_nets.univariate_builder import (
    UnivariateLayout,
    UnivariateTarget,
    escalate,
    univariate_layout,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RadialTarget:
    """f(x) = g*(|x|²) with g* given on [0, 1]."""
    g: UnivariateTarget
    d: int

    def __post_init__(self):
        if self.d < 2:
            raise ArgumentError(f"ambient dimension must be at least 2, got {self.d}")

    def __call__(self, x: Sequence[RealLike]) -> mpf:
        if len(x) != self.d:
            raise ArgumentError(f"point has dimension {len(x)}, target expects {self.d}")
        return self.g(sum((mp.mpf(v) ** 2 for v in x), mp.mpf(0)))

    @property
    def r(self) -> mpf:
        return self.g.r

    def on_half_interval(self) -> UnivariateTarget:
        """g(τ) = g*(2τ) on [0, 1/2]."""
        return self.g.rescaled(2)


@dataclass(frozen=True)
class SquareNet:
    """h_3d(x) = Σ_ℓ h_3(x^(ℓ))/2 ≈ |x|²/2."""
    h3: ShallowNet1D
    d: int
    eps1: mpf

    def __call__(self, x: Sequence[RealLike]) -> mpf:
        return sum((self.h3(v) for v in x), mp.mpf(0)) / 2

    @property
    def scale(self) -> mpf:
        """𝓑 = d·max|a_k|/2, so each partial sum over ℓ divided by 2𝓑 lies in [−1, 1]."""
        return self.d * self.h3.max_abs_coefficient() / 2

    @property
    def precision_bits(self) -> int:
        return self.h3.precision_bits


@dataclass(frozen=True)
class UnifiedSquareNet:
    """h_6,d(x) = Σ_{k,k'} 𝓑a'_{k'} φ(w'_{k'}·Σ_ℓ a_k/(2𝓑)·φ(w_k x^(ℓ) + θ0) + θ0)."""
    square: SquareNet
    identity: ShallowNet1D
    eps2: mpf

    @property
    def precision_bits(self) -> int:
        return ensure_same_precision(self.square.precision_bits, self.identity.precision_bits)

    def nodes(self) -> List[Tuple[mpf, mpf, mpf, mpf, mpf]]:
        """The six (outer a, inner weight w', leaf a, leaf w, leaf θ) tuples."""
        scale = self.square.scale
        out = []
        for a_k, w_k, theta_k in self.square.h3.terms:
            for a_id, w_id, _ in self.identity.terms:
                out.append((scale * a_id, w_id, a_k / (2 * scale), w_k, theta_k))
        return out

    def __call__(self, x: Sequence[RealLike]) -> mpf:
        act = self.identity.act
        theta0 = act.anchor
        total = mp.mpf(0)
        xs = [mp.mpf(v) for v in x]
        for outer, w_id, leaf_a, leaf_w, leaf_b in self.nodes():
            inner = sum((leaf_a * act(leaf_w * v + leaf_b) for v in xs), mp.mpf(0))
            total += outer * act(w_id * inner + theta0)
        return total


class EpsilonCascade(BaseModel):
    """Accuracies actually used by one radial build, as decimal strings."""
    branch: str
    power: str
    eps: str
    eps1: str
    eps2: str
    C5: str
    C1: str
    lipschitz: str


class BuildReport(BaseModel):
    """Structured record of a radial build."""
    n: int
    d: int
    r: float
    s: int
    A: str
    eps_cascade: EpsilonCascade
    realized_widths: List[int]  # built net, outer layer 3 neurons per gate slot
    class_widths: List[int]     # hypothesis class, outer layer counted in gate slots
    gate_slots: int
    max_abs_weight: str
    param_count: int
    alpha: int
    measured_sup_error: Optional[str] = None
    precision_bits: int
    metadata: Dict[str, str] = Field(default_factory=dict)


def class_widths(d: int, s: int, n: int) -> Tuple[int, int, int, int]:
    """(d, 6, s+3, 3n+3): the hypothesis-class widths counted in gate slots."""
    return (d, 6, s + 3, 3 * n + 3)


def realized_widths(d: int, s: int, n: int) -> Tuple[int, int, int, int]:
    """Widths of the built net: each gate slot holds the three square-net neurons."""
    return (d, 6, s + 3, 9 * (n + 1))


def alpha_exponent(r: RealLike, s: int) -> int:
    """48(3 + r(r+1) + r·(s+1)!·7(r+1)), rounded up."""
    r = mp.mpf(r)
    value = 48 * (3 + r * (r + 1) + r * mp.factorial(s + 1) * 7 * (r + 1))
    return int(mp.ceil(value))


def build_square_net(d: int, eps1: RealLike, act: Activation, theta0: Optional[RealLike] = None) -> SquareNet:
    """
    Square stage with guarantee ||x|²/2 − h_3d(x)| <= d·eps1/2 on the unit ball.

    Raises:
        ArgumentError: If eps1 is outside (0, 1/(d+2)]
    """
    eps1 = mp.mpf(eps1)
    if not 0 < eps1 <= mp.mpf(1) / (d + 2):
        raise ArgumentError(f"eps1 must lie in (0, 1/(d+2)], got {mp.nstr(eps1, 6)}")
    if theta0 is not None:
        act = act.with_anchor(theta0)
    h3 = poly_to_shallow(Poly.of([0, 0, 1]), act, None, eps1).padded(3)
    return SquareNet(h3=h3, d=d, eps1=eps1)


def unify_activation(
    h3d: SquareNet, eps2: RealLike, act: Activation, theta0: Optional[RealLike] = None
) -> UnifiedSquareNet:
    """
    Replace the linear read-out of h_3d by a φ-layer of six nodes.

    Each of the three partial sums V_k = Σ_ℓ a_k φ(w_k x^(ℓ) + θ0)/(2𝓑) lies in
    [−1, 1] and passes through the identity net, so the added error is at most
    3𝓑·eps2.

    Raises:
        PrecisionError: If h3d was built at another precision than the active one
    """
    ensure_same_precision(h3d.precision_bits, current_precision())
    if theta0 is not None:
        act = act.with_anchor(theta0)
    identity = poly_to_shallow(Poly.of([0, 1]), act, None, eps2).padded(2)
    return UnifiedSquareNet(square=h3d, identity=identity, eps2=mp.mpf(eps2))


def univariate_lipschitz(layout: UnivariateLayout) -> mpf:
    """L_U = Σ_m |a_m| Σ_i |a_{m,i}·w_{m,i}|, a Lipschitz bound of the univariate net in t."""
    return sum(
        (abs(o.coef) * sum((abs(i.coef * i.slope) for i in o.inner), mp.mpf(0)) for o in layout.outer),
        mp.mpf(0),
    )


def cascade_power(s: int, cascade: CascadeBranch = CascadeBranch.SMOOTH, s0: Optional[int] = None,
                  v0: RealLike = 1) -> mpf:
    """
    Exponent e of the univariate outer-weight growth ε^(−e).

    The smooth branch (s0 >= 3) gives 7(s+1)!, or 7/v0·(s+1)! when s = s0.
    The low-order branch (s0 = 2) gives (v0+6)/v0·(s+1)!, or
    (v0+6)/v0²·(s+1)! when s = 2.
    """
    v0 = mp.mpf(v0)
    factorial = mp.factorial(s + 1)
    if cascade == CascadeBranch.LOW_ORDER:
        return (v0 + 6) / (v0**2 if s == 2 else v0) * factorial
    s0 = config.s0 if s0 is None else s0
    return 7 / (v0 if s == s0 else 1) * factorial


def epsilon_cascade(
    n: int,
    r: mpf,
    s: int,
    d: int,
    A: mpf,
    lipschitz: mpf,
    cascade: CascadeBranch = CascadeBranch.SMOOTH,
    v0: RealLike = 1,
    s0: Optional[int] = None,
) -> Tuple[mpf, mpf, mpf]:
    """
    (ε, ε_1, C̄_5) for the radial build.

    ε = n^−(r+1); ε_1 = ε^(1+e)/(C̄_5(d+2)An²) with e from ``cascade_power``,
    where C̄_5 is at least L_U·ε^e/(An²), so that L_U·(d+2)ε_1/2 <= ε/2.
    """
    eps = mp.mpf(n) ** -(r + 1)
    power = cascade_power(s, cascade, s0, v0)
    An2 = A * n * n
    C5 = max(mp.mpf(1), lipschitz * eps**power / An2)
    eps1 = eps ** (1 + power) / (C5 * (d + 2) * An2)
    return eps, min(eps1, mp.mpf(1) / (d + 2)), C5


def identity_budget(eps1: mpf, d: int, square: SquareNet, v0: RealLike = 1,
                    measured: bool = False,
                    cascade: CascadeBranch = CascadeBranch.SMOOTH) -> Tuple[mpf, mpf]:
    """
    ε_2 = 2^(−6/v0) ε_1^7 / (3d·C̃_1), with ε_1^((6+v0)/v0) in place of ε_1^7 on
    the low-order branch; capped at ε_1/(3𝓑) for the stage guarantee.

    C̃_1 is 1, or the square-net coefficient scale when ``measured`` is set.
    """
    v0 = mp.mpf(v0)
    C1 = max(mp.mpf(1), square.h3.max_abs_coefficient()) if measured else mp.mpf(1)
    power = (6 + v0) / v0 if cascade == CascadeBranch.LOW_ORDER else 7
    eps2 = mp.mpf(2) ** (-6 / v0) * eps1**power / (3 * d * C1)
    eps2 = min(eps2, eps1 / (3 * max(square.scale, mp.mpf(1))), mp.mpf(1) / 2)
    return eps2, C1


def radial_tree(layout: UnivariateLayout, unified: UnifiedSquareNet, act: Activation, d: int, bits: int) -> TreeNet:
    """
    Embed the univariate layout over h_6,d as a depth-3 tree.

    Raises:
        PrecisionError: If the layout, the square stage and ``bits`` disagree
    """
    ensure_same_precision(layout.precision_bits, unified.precision_bits, bits)
    theta0 = act.anchor
    arch = TreeArch.uniform((d, 6, layout.inner_width, len(layout.outer)), act)
    nodes = unified.nodes()
    leaves, layer1, layer2, layer3 = [], [], [], []
    for outer in layout.outer:
        layer3.append((outer.coef, outer.bias))
        for inner in outer.inner:
            layer2.append((inner.coef, inner.offset))
            for node_a, w_id, leaf_a, leaf_w, leaf_b in nodes:
                layer1.append((inner.slope * node_a, theta0))
                for _ in range(d):
                    leaves.append((w_id * leaf_a, leaf_w, leaf_b))
    return TreeNet(arch, tuple(leaves), (tuple(layer1), tuple(layer2), tuple(layer3)), bits)


def measure_radial_error(
    net: TreeNet,
    target: RadialTarget,
    n_radial: int,
    n_sphere: int,
    seed: int = 0,
    fast: bool = False,
) -> mpf:
    """
    Max of |f(x) − net(x)| over radii i/n_radial times random unit directions.

    Directions are drawn one by one, so a larger ``n_sphere`` extends the
    point set of a smaller one.
    """
    if n_radial < 1 or n_sphere < 1:
        raise ArgumentError("n_radial and n_sphere must be at least 1")
    rng = make_rng(seed, 0x5AD1)
    directions = []
    for _ in range(n_sphere):
        v = rng.standard_normal(target.d)
        directions.append(v / np.linalg.norm(v))
    radii = [i / n_radial for i in range(n_radial + 1)]
    points = [r * u for r in radii for u in directions]
    with precision(net.precision_bits):
        if fast and fast_path_allowed(net, mp.mpf(10) ** -6):
            values = eval_float(net, np.array(points))
            return max(abs(target([mp.mpf(float(c)) for c in p]) - mp.mpf(float(v)))
                       for p, v in zip(points, values))
        worst = mp.mpf(0)
        for p in points:
            x = [mp.mpf(float(c)) for c in p]
            worst = max(worst, abs(target(x) - evaluate(net, x)))
        return worst


def build_radial_net(
    target: RadialTarget,
    n: int,
    act: Activation,
    A_override: Optional[RealLike] = None,
    cascade: Optional[CascadeBranch] = None,
    precision_bits: Optional[int] = None,
    measured_constants: bool = False,
    measure: Tuple[int, int] = (16, 8),
) -> Tuple[TreeNet, BuildReport]:
    """
    Build the radial deep net for ``target`` at resolution n.

    Uses A = n^(r+1) (or ``A_override``) and ε = n^−(r+1), then cascades ε into
    the square-stage and identity-stage accuracies.

    Args:
        measure: (n_radial, n_sphere) for the recorded sup error; (0, 0) skips it

    Raises:
        ArgumentError: If n < 2
        UnsupportedOrderError: If the target smoothness exceeds s0
        PrecisionError: If the preflight exceeds the precision ceiling
    """
    if n < 2:
        raise ArgumentError("n must be at least 2")
    cascade = cascade or config.cascade
    g = target.on_half_interval()
    s, d = g.s, target.d
    holder: Dict[str, object] = {}

    def build(bits: int) -> TreeNet:
        with precision(bits):
            r = g.r
            A = mp.mpf(A_override) if A_override is not None else mp.mpf(n) ** (r + 1)
            eps = mp.mpf(n) ** -(r + 1)
            layout = univariate_layout(g, n, A, eps, act, cascade=cascade)
            lipschitz = univariate_lipschitz(layout)
            eps, eps1, C5 = epsilon_cascade(n, r, s, d, A, lipschitz, cascade)
            square = build_square_net(d, eps1, act)
            eps2, C1 = identity_budget(eps1, d, square, measured=measured_constants, cascade=cascade)
            unified = unify_activation(square, eps2, act)
            logger.debug("Cascade n=%d: eps=%s eps1=%s eps2=%s", n, mp.nstr(eps, 4),
                         mp.nstr(eps1, 4), mp.nstr(eps2, 4))
            holder.update(layout=layout, cascade=EpsilonCascade(
                branch=cascade.value, power=mp.nstr(cascade_power(s, cascade), 20),
                eps=mp.nstr(eps, 20), eps1=mp.nstr(eps1, 20), eps2=mp.nstr(eps2, 20),
                C5=mp.nstr(C5, 20), C1=mp.nstr(C1, 20), lipschitz=mp.nstr(lipschitz, 20),
            ), A=A)
            return radial_tree(layout, unified, act, d, bits)

    net = escalate(build, mp.mpf(n) ** -(g.r + 1), precision_bits)
    layout: UnivariateLayout = holder["layout"]  # type: ignore[assignment]
    with precision(net.precision_bits):
        metadata = {
            "builder": "radial",
            "target": target.g.name,
            "n": str(n),
            "d": str(d),
            "A": mp.nstr(holder["A"], 20),
            "eps": holder["cascade"].eps,  # type: ignore[attr-defined]
            "precision_bits": str(net.precision_bits),
        }
        net = TreeNet(net.arch, net.leaf_params, net.node_params, net.precision_bits, metadata)
        report = BuildReport(
            n=n,
            d=d,
            r=float(g.r),
            s=s,
            A=metadata["A"],
            eps_cascade=holder["cascade"],
            realized_widths=list(net.arch.widths),
            class_widths=list(class_widths(d, s, n)),
            gate_slots=layout.gate_slots,
            max_abs_weight=mp.nstr(max_abs_weight(net), 20),
            param_count=param_count(net.arch),
            alpha=alpha_exponent(g.r, s),
            precision_bits=net.precision_bits,
            metadata=metadata,
        )
    if measure[0] and measure[1]:
        error = measure_radial_error(net, target, measure[0], measure[1])
        report = report.model_copy(update={"measured_sup_error": mp.nstr(error, 12)})
    logger.info("Built radial net d=%d n=%d: widths %s, %d parameters, %d bits",
                d, n, tuple(net.arch.widths), report.param_count, net.precision_bits)
    return net, report


def audit_bounds(net: TreeNet, report: BuildReport, act: Activation) -> BoundCheck:
    """check_bounds with α from the smoothness and ℛ = max(|θ0| + 4, recorded max weight)."""
    with precision(net.precision_bits):
        R = max(abs(act.anchor) + 4, mp.mpf(report.max_abs_weight))
        return check_bounds(net, BoundedClassSpec(alpha=report.alpha, R=R))


def parameter_sandwich(net: TreeNet, s: int, n: int) -> Tuple[int, int, int]:
    """
    (6d(s+3)N_3, A_L, 54d(s+3)N_3) with N_3 the realized outer width.

    A net built by ``build_radial_net`` always satisfies lower <= A_L <= upper.
    """
    d = net.arch.d
    outer = net.arch.widths[-1]
    base = d * (s + 3) * outer
    return 6 * base, param_count(net.arch), 54 * base
