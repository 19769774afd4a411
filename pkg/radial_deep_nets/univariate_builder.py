"""
Localized Taylor-bump approximation of univariate targets on [0, 1/2].

The operator Φ(t) = Σ_j T_j(t)·b_j(t) glues Taylor polynomials T_j taken at the
nodes t_j = j/(2n) with sigmoidal bumps b_j. The two-hidden-layer net realizes
each product T_j·b_j through the product gate: the first hidden layer holds the
shallow net h_j ≈ T_j/B_1 and the two bump neurons, and the outer layer holds
three gate slots of three neurons each for every node.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

from mpmath import mp, mpf

from radial_deep_nets.activations import Activation, delta_phi, hoelder_constant, sup_norm
from radial_deep_nets.config import CascadeBranch, config
from radial_deep_nets.exceptions import ArgumentError, PrecisionError, UnsupportedOrderError
from radial_deep_nets.numeric_core import (
    GridSpec,
    RealLike,
    current_precision,
    grid_sup_norm,
    make_rng,
    precision,
    random_reals,
)
from radial_deep_nets.poly_bridge import Poly, ProductGate, make_product_gate, poly_to_shallow
from radial_deep_nets.tree_net import TreeArch, TreeNet, required_precision_bits

logger = logging.getLogger(__name__)

DerivativeOracle = Callable[[int, mpf], mpf]
DOMAIN = (mp.mpf(0), mp.mpf(1) / 2)


@dataclass(frozen=True)
class UnivariateTarget:
    """A target g with derivatives up to order s and Hölder data (s, v, c0)."""
    name: str
    oracle: DerivativeOracle
    s: int
    v: mpf
    c0: mpf
    domain: Tuple[mpf, mpf] = DOMAIN
    sup: Optional[mpf] = None

    def __post_init__(self):
        object.__setattr__(self, "v", mp.mpf(self.v))
        object.__setattr__(self, "c0", mp.mpf(self.c0))
        if self.s < 0:
            raise ArgumentError("s must be non-negative")
        if not 0 < self.v <= 1:
            raise ArgumentError("v must lie in (0, 1]")
        if self.c0 < 0:
            raise ArgumentError("c0 must be non-negative")

    @property
    def r(self) -> mpf:
        return self.s + self.v

    def __call__(self, t: RealLike) -> mpf:
        return self.oracle(0, mp.mpf(t))

    def derivative(self, i: int, t: RealLike) -> mpf:
        if i > self.s + 1:
            raise UnsupportedOrderError(f"target '{self.name}' has no derivative of order {i}")
        return self.oracle(i, mp.mpf(t))

    def rescaled(self, factor: RealLike) -> "UnivariateTarget":
        """g(τ) := g*(factor·τ); the Hölder constant scales by factor^r."""
        factor = mp.mpf(factor)
        if factor <= 0:
            raise ArgumentError("rescale factor must be positive")
        base = self.oracle

        def oracle(i: int, t: mpf) -> mpf:
            return factor**i * base(i, factor * t)

        return UnivariateTarget(
            name=f"{self.name}∘{mp.nstr(factor, 6)}x",
            oracle=oracle,
            s=self.s,
            v=self.v,
            c0=self.c0 * factor**self.r,
            domain=(self.domain[0] / factor, self.domain[1] / factor),
            sup=self.sup,
        )


def _hoelder(next_sup: mpf, domain: Tuple[mpf, mpf], v: mpf) -> mpf:
    # |h(t) - h(t')| <= sup|h'|·|t - t'| <= sup|h'|·diam^(1-v)·|t - t'|^v
    return next_sup * (domain[1] - domain[0]) ** (1 - v)


def _target(name, oracle, sups, s, v, domain, sup):
    v = mp.mpf(v)
    domain = (mp.mpf(domain[0]), mp.mpf(domain[1]))
    return UnivariateTarget(name, oracle, s, v, _hoelder(sups(s + 1, domain), domain, v), domain, sup)


def constant_target(value: RealLike = 1, s: int = 0, v: RealLike = 1, domain=DOMAIN) -> UnivariateTarget:
    value = mp.mpf(value)
    oracle = lambda i, t: value if i == 0 else mp.mpf(0)
    return _target("constant", oracle, lambda k, dom: mp.mpf(0), s, v, domain, abs(value))


def linear_target(slope: RealLike = 1, s: int = 0, v: RealLike = 1, domain=DOMAIN) -> UnivariateTarget:
    slope = mp.mpf(slope)

    def oracle(i, t):
        return slope * t if i == 0 else (slope if i == 1 else mp.mpf(0))

    def sups(k, dom):
        return abs(slope) if k == 1 else mp.mpf(0)

    reach = max(abs(mp.mpf(domain[0])), abs(mp.mpf(domain[1])))
    return _target("linear", oracle, sups, s, v, domain, abs(slope) * reach)


def square_target(s: int = 0, v: RealLike = 1, domain=DOMAIN) -> UnivariateTarget:
    def oracle(i, t):
        return (t * t, 2 * t, mp.mpf(2))[i] if i < 3 else mp.mpf(0)

    def sups(k, dom):
        reach = max(abs(dom[0]), abs(dom[1]))
        return (reach**2, 2 * reach, mp.mpf(2))[k] if k < 3 else mp.mpf(0)

    reach = max(abs(mp.mpf(domain[0])), abs(mp.mpf(domain[1])))
    return _target("square", oracle, sups, s, v, domain, reach**2)


def sine_target(amplitude: RealLike = 1, s: int = 1, v: RealLike = 1, domain=DOMAIN) -> UnivariateTarget:
    """amplitude·sin(2πt)."""
    amplitude = mp.mpf(amplitude)

    def oracle(i, t):
        omega = 2 * mp.pi
        return amplitude * omega**i * mp.sin(omega * t + i * mp.pi / 2)

    def sups(k, dom):
        return abs(amplitude) * (2 * mp.pi) ** k

    return _target("sine", oracle, sups, s, v, domain, abs(amplitude))


TARGETS: Dict[str, Callable[..., UnivariateTarget]] = {
    "constant": constant_target,
    "linear": linear_target,
    "square": square_target,
    "sine": sine_target,
}


def get_target(name: str, **kwargs) -> UnivariateTarget:
    """Look up a catalogue target by name."""
    try:
        factory = TARGETS[name]
    except KeyError:
        raise ArgumentError(f"Unknown target '{name}'. Choose one of: {', '.join(TARGETS)}")
    return factory(**kwargs)


def estimate_sup_norm(target: UnivariateTarget, count: Optional[int] = None) -> mpf:
    """Grid estimate of ‖g‖∞ over the target's domain."""
    grid = GridSpec(lo=float(target.domain[0]), hi=float(target.domain[1]),
                    count=count or config.sup_grid_count, jitter_count=0)
    return grid_sup_norm(target, lambda t: mp.mpf(0), grid)


def estimate_hoelder(target: UnivariateTarget, pairs: int = 2000, seed: int = 0) -> mpf:
    """Finite-sample estimate of the Hölder constant of g^(s) with exponent v."""
    rng = make_rng(seed, 0x40E1)
    lo, hi = float(target.domain[0]), float(target.domain[1])
    left = random_reals(rng, lo, hi, pairs)
    right = random_reals(rng, lo, hi, pairs)
    best = mp.mpf(0)
    for t, u in zip(left, right):
        if t == u:
            continue
        diff = abs(target.derivative(target.s, t) - target.derivative(target.s, u))
        best = max(best, diff / abs(t - u) ** target.v)
    return best


@dataclass(frozen=True)
class BumpSystem:
    """Bump parameters A, n with nodes t_j = j/(2n)."""
    A: mpf
    n: int

    def __post_init__(self):
        object.__setattr__(self, "A", mp.mpf(self.A))
        if self.A < 1:
            raise ArgumentError("A must be at least 1")
        if self.n < 1:
            raise ArgumentError("n must be at least 1")

    def node(self, j: int) -> mpf:
        return mp.mpf(j) / (2 * self.n)

    @property
    def slope(self) -> mpf:
        return -4 * self.A * self.n


def bump(sys: BumpSystem, act: Activation, j: int, t: RealLike) -> mpf:
    """
    b_0(t) = φ(−4An·t + A) and b_j = φ(−4An(t − t_j) + A) − φ(−4An(t − t_{j−1}) + A).

    Raises:
        ArgumentError: If j is outside 0..n
    """
    if not 0 <= j <= sys.n:
        raise ArgumentError(f"bump index {j} outside 0..{sys.n}")
    t = mp.mpf(t)
    value = act(sys.slope * (t - sys.node(j)) + sys.A)
    if j > 0:
        value -= act(sys.slope * (t - sys.node(j - 1)) + sys.A)
    return value


def taylor_at_node(target: UnivariateTarget, s: int, t_j: RealLike, t: RealLike) -> mpf:
    """Σ_{i <= s} g^(i)(t_j)(t − t_j)^i / i!."""
    t_j, t = mp.mpf(t_j), mp.mpf(t)
    total = mp.mpf(0)
    for i in range(s + 1):
        total += target.derivative(i, t_j) * (t - t_j) ** i / mp.factorial(i)
    return total


def phi_operator(
    target: UnivariateTarget, n: int, s: int, A: RealLike, act: Activation, t: RealLike
) -> mpf:
    """Σ_j T_{s,g,t_j}(t)·b_j(t)."""
    sys = BumpSystem(A, n)
    return sum(
        (taylor_at_node(target, s, sys.node(j), t) * bump(sys, act, j, t) for j in range(n + 1)),
        mp.mpf(0),
    )


def target_sup(target: UnivariateTarget) -> mpf:
    return target.sup if target.sup is not None else estimate_sup_norm(target)


def operator_constant(target: UnivariateTarget, act: Activation) -> mpf:
    """C̃_3 = 2(c0(1 + ‖φ‖∞)/s! + ‖g‖∞)."""
    return 2 * (target.c0 * (1 + sup_norm(act)) / mp.factorial(target.s) + target_sup(target))


def operator_error_bound(
    target: UnivariateTarget, n: int, A: RealLike, act: Activation
) -> mpf:
    """C̃_3(n·δ_φ(A) + n^(−r)), the sup error guarantee of ``phi_operator``."""
    return operator_constant(target, act) * (n * delta_phi(act, A) + mp.mpf(n) ** -target.r)


@dataclass(frozen=True)
class InnerNeuron:
    """coef·φ(slope·t + offset) in the first hidden layer."""
    coef: mpf
    slope: mpf
    offset: mpf


@dataclass(frozen=True)
class OuterNeuron:
    """coef·φ(Σ inner + bias) in the outer layer."""
    coef: mpf
    bias: mpf
    inner: Tuple[InnerNeuron, ...]


@dataclass(frozen=True)
class UnivariateLayout:
    """Parameters of the two-hidden-layer construction before tree embedding."""
    outer: Tuple[OuterNeuron, ...]
    s: int
    r: mpf
    n: int
    A: mpf
    eps: mpf
    eps1: mpf
    B1: mpf
    gate: ProductGate
    precision_bits: int = field(default_factory=current_precision)

    @property
    def gate_slots(self) -> int:
        return 3 * (self.n + 1)

    @property
    def inner_width(self) -> int:
        return self.s + 3


@dataclass(frozen=True)
class UnivariateBuild:
    """A built univariate net with the constants of its error guarantee."""
    net: TreeNet
    layout: UnivariateLayout
    B1: mpf
    eps1: mpf
    C2: mpf
    C3: mpf
    C4: mpf
    precision_bits: int
    metadata: Dict[str, str] = field(default_factory=dict)

    @property
    def gate_slots(self) -> int:
        return self.layout.gate_slots

    def error_bound(self, act: Activation) -> mpf:
        """C̃_4(n·δ_φ(A) + n^(−r) + n·eps)."""
        lay = self.layout
        n = mp.mpf(lay.n)
        return self.C4 * (n * delta_phi(act, lay.A) + n**-lay.r + n * lay.eps)


def inner_budget(eps: mpf, cascade: CascadeBranch, v0: RealLike = 1) -> mpf:
    """ε_1 = eps^7/4 on the smooth branch, eps^(1 + 6/v0)/4 on the low-order one."""
    if cascade == CascadeBranch.LOW_ORDER:
        return eps ** (1 + 6 / mp.mpf(v0)) / 4
    return eps**7 / 4


def univariate_layout(
    target: UnivariateTarget,
    n: int,
    A: RealLike,
    eps: RealLike,
    act: Activation,
    s0: Optional[int] = None,
    cascade: Optional[CascadeBranch] = None,
    B1: Optional[RealLike] = None,
) -> UnivariateLayout:
    """
    Compute the outer and inner neurons realizing Σ_j T_j·b_j.

    Inputs stay in t; callers embed the slope/offset pairs into a tree.
    """
    s0 = config.s0 if s0 is None else s0
    cascade = cascade or config.cascade
    s = target.s
    if s > s0:
        raise UnsupportedOrderError(f"target smoothness s={s} exceeds activation order s0={s0}")
    eps = mp.mpf(eps)
    if not 0 < eps <= 1:
        raise ArgumentError("eps must lie in (0, 1]")
    sys = BumpSystem(A, n)
    theta0 = act.anchor

    if B1 is None:
        B1 = 4 * (target_sup(target) + target.c0 + 2)
    B1 = mp.mpf(B1)
    gate_eps = min(eps, mp.mpf(1) / 2)
    eps1 = inner_budget(gate_eps, cascade)
    gate = make_product_gate(act, theta0, gate_eps, s0=s0)
    c0_act = hoelder_constant(act, s0) if s == s0 else None

    outer: List[OuterNeuron] = []
    zero = mp.mpf(0)
    for j in range(n + 1):
        t_j = sys.node(j)
        coeffs = [target.derivative(i, t_j) / (mp.factorial(i) * B1) for i in range(s + 1)]
        h_j = poly_to_shallow(Poly.of(coeffs), act, theta0, eps1, s0=s0, c0=c0_act)
        h_j = h_j.padded(s + 1)
        active = any(a for a, _, _ in h_j.terms)
        h_terms = [(a, w, -w * t_j + theta0) for a, w, _ in h_j.terms]
        bumps = [(mp.mpf(1), sys.slope, -sys.slope * t_j + sys.A)]
        if j > 0:
            bumps.append((mp.mpf(-1), sys.slope, -sys.slope * sys.node(j - 1) + sys.A))
        else:
            bumps.append((zero, sys.slope, sys.A))

        # Slots feed (h + b/B1)/2, h and b/B1 into the three evaluations of h3.
        slots = (
            (2 * B1**2, mp.mpf(1) / 2, 1 / (2 * B1)),
            (-(B1**2) / 2, mp.mpf(1), zero),
            (-(B1**2) / 2, zero, 1 / B1),
        )
        for scale, h_weight, b_weight in slots:
            for c, nu, _ in gate.h3.terms:
                inner = tuple(
                    InnerNeuron(nu * h_weight * a, w, off) for a, w, off in h_terms
                ) + tuple(InnerNeuron(nu * b_weight * sign, w, off) for sign, w, off in bumps)
                coef = scale * c if active else zero
                outer.append(OuterNeuron(coef=coef, bias=theta0, inner=inner))

    logger.debug("Univariate layout n=%d A=%s: B1=%s eps1=%s", n, mp.nstr(sys.A, 6),
                 mp.nstr(B1, 6), mp.nstr(eps1, 4))
    return UnivariateLayout(tuple(outer), s, target.r, n, sys.A, eps, eps1, B1, gate)


def layout_to_tree(layout: UnivariateLayout, act: Activation, bits: int) -> TreeNet:
    """Embed a layout as a depth-2 tree with identity leaves t ↦ slope·t."""
    identity = Activation(name="identity")
    arch = TreeArch(
        L=2,
        widths=(1, layout.inner_width, len(layout.outer)),
        activations=(identity, act, act),
    )
    one, zero = mp.mpf(1), mp.mpf(0)
    leaves, layer1, layer2 = [], [], []
    for neuron in layout.outer:
        layer2.append((neuron.coef, neuron.bias))
        for inner in neuron.inner:
            layer1.append((inner.coef, inner.offset))
            leaves.append((one, inner.slope, zero))
    return TreeNet(arch, tuple(leaves), (tuple(layer1), tuple(layer2)), bits)


def escalate(build: Callable[[int], TreeNet], target: RealLike, bits: Optional[int] = None,
             ceiling: Optional[int] = None) -> TreeNet:
    """
    Build at ``bits`` and rebuild at the preflight requirement until it fits.

    Raises:
        PrecisionError: If the requirement exceeds ``ceiling``
    """
    bits = bits or config.precision_bits
    ceiling = ceiling or config.max_precision_bits
    while True:
        net = build(bits)
        with precision(bits):
            required = required_precision_bits(net, target)
        if required <= bits:
            return net
        if required > ceiling:
            raise PrecisionError(
                f"construction needs {required} bits, above the ceiling of {ceiling}",
                required_bits=required,
            )
        logger.info("Escalating precision from %d to %d bits", bits, required)
        bits = required


def build_univariate_net(
    target: UnivariateTarget,
    n: int,
    A: RealLike,
    eps: RealLike,
    act: Activation,
    theta0: Optional[RealLike] = None,
    s0: Optional[int] = None,
    cascade: Optional[CascadeBranch] = None,
    precision_bits: Optional[int] = None,
) -> UnivariateBuild:
    """
    Build the two-hidden-layer net approximating ``target`` on [0, 1/2].

    Widths are (1, s+3, 9(n+1)): 3(n+1) gate slots of three neurons each.

    Raises:
        UnsupportedOrderError: If s > s0
        PrecisionError: If the required precision exceeds the configured ceiling
    """
    if theta0 is not None:
        act = act.with_anchor(theta0)
    holder: Dict[str, UnivariateLayout] = {}

    def build(bits: int) -> TreeNet:
        with precision(bits):
            layout = univariate_layout(target, n, A, eps, act, s0=s0, cascade=cascade)
            holder["layout"] = layout
            return layout_to_tree(layout, act, bits)

    net = escalate(build, eps, precision_bits)
    layout = holder["layout"]
    with precision(net.precision_bits):
        C2 = layout.gate.h3.max_abs_coefficient()
        C3 = operator_constant(target, act)
        B1 = layout.B1
        C4 = C3 + 2 * B1**2 + 4 * B1 + 1
        metadata = {
            "builder": "univariate",
            "target": target.name,
            "n": str(n),
            "A": mp.nstr(layout.A, 20),
            "eps": mp.nstr(layout.eps, 20),
            "r": mp.nstr(target.r, 20),
            "precision_bits": str(net.precision_bits),
        }
    net = TreeNet(net.arch, net.leaf_params, net.node_params, net.precision_bits, metadata)
    logger.info("Built univariate net n=%d with widths %s at %d bits",
                n, net.arch.widths, net.precision_bits)
    return UnivariateBuild(net, layout, B1, layout.eps1, C2, C3, C4, net.precision_bits, metadata)


def univariate_error_bound(build: UnivariateBuild, act: Activation) -> mpf:
    """Sup-error guarantee of a univariate build at its own precision."""
    with precision(build.precision_bits):
        return build.error_bound(act)


def audit_weight_caps(net: TreeNet, A: RealLike, n: int, theta0: RealLike) -> List[str]:
    """
    Check |w| <= 4An on leaves and |θ| <= 1 + 3An + |θ0| on every bias.

    Returns:
        Violation messages; empty when every cap holds
    """
    with precision(net.precision_bits):
        A, theta0 = mp.mpf(A), mp.mpf(theta0)
        w_cap = 4 * A * n
        b_cap = 1 + 3 * A * n + abs(theta0)
        violations = []
        for ref, value in net.iter_params():
            if ref.layer == 0 and ref.name == "w" and abs(value) > w_cap:
                violations.append(f"{ref}: |w|={mp.nstr(abs(value), 6)} > {mp.nstr(w_cap, 6)}")
            if ref.name == "b" and abs(value) > b_cap:
                violations.append(f"{ref}: |θ|={mp.nstr(abs(value), 6)} > {mp.nstr(b_cap, 6)}")
        return violations
