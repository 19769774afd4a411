"""
Tree-structured deep nets.

A depth-L tree net has widths N_0, ..., N_L. Leaves compute a·φ_0(w·x^(j) + b)
and every internal node at layer k sums a·φ_k(child + b) over its N_k
children. Parameters are stored per path, layer by layer, as flat tuples:
layer k holds T_k = N_k·N_{k+1}···N_L terms, term t belongs to node t // N_k,
and for k >= 1 the child of term t is node t of layer k - 1. Leaf term t reads
input component t mod N_0.
"""

import json
import logging
from dataclasses import dataclass, field
from math import prod
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from mpmath import mp, mpf
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from radial_deep_nets.activations import Activation, eval_derivative
from radial_deep_nets.config import ActivationName
from radial_deep_nets.exceptions import ArgumentError, ParseError, PrecisionError
from radial_deep_nets.numeric_core import RealLike, precision

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
GUARD_BITS = 64

LeafParam = Tuple[mpf, mpf, mpf]
NodeParam = Tuple[mpf, mpf]


class TreeArch(BaseModel):
    """Layer count, widths and per-layer activations of a tree net."""
    model_config = ConfigDict(frozen=True)

    L: int
    widths: Tuple[int, ...]
    activations: Tuple[Activation, ...]

    @model_validator(mode="after")
    def _check_shape(self) -> "TreeArch":
        if self.L < 1:
            raise ValueError(f"L must be at least 1, got {self.L}")
        if len(self.widths) != self.L + 1:
            raise ValueError(f"expected {self.L + 1} widths, got {len(self.widths)}")
        if len(self.activations) != self.L + 1:
            raise ValueError(
                f"expected {self.L + 1} activations, got {len(self.activations)}"
            )
        if any(w < 1 for w in self.widths):
            raise ValueError(f"widths must be positive, got {self.widths}")
        return self

    @classmethod
    def uniform(cls, widths: Sequence[int], act: Activation) -> "TreeArch":
        """Architecture using one activation at every layer."""
        return cls(L=len(widths) - 1, widths=tuple(widths), activations=(act,) * len(widths))

    @property
    def d(self) -> int:
        return self.widths[0]

    def term_counts(self) -> Tuple[int, ...]:
        """T_k = N_k N_{k+1} ... N_L for k = 0..L."""
        return tuple(prod(self.widths[k:]) for k in range(self.L + 1))


@dataclass(frozen=True)
class BoundedClassSpec:
    """Parameter box |param| <= R·(A_L)^alpha of the bounded tree class."""
    alpha: mpf
    R: mpf

    def __post_init__(self):
        object.__setattr__(self, "alpha", mp.mpf(self.alpha))
        object.__setattr__(self, "R", mp.mpf(self.R))
        if self.alpha < 1 or self.R < 1:
            raise ArgumentError("BoundedClassSpec needs alpha >= 1 and R >= 1")

    def bound(self, arch: TreeArch) -> mpf:
        return self.R * mp.mpf(param_count(arch)) ** self.alpha


@dataclass(frozen=True)
class ParamRef:
    """Location of a single scalar inside a TreeNet."""
    layer: int
    index: int
    name: str

    def __str__(self) -> str:
        return f"layer {self.layer} term {self.index} {self.name}"


@dataclass(frozen=True)
class BoundCheck:
    """Outcome of a parameter-box audit."""
    ok: bool
    bound: mpf
    worst: Optional[ParamRef]
    worst_value: mpf


@dataclass(frozen=True)
class TreeNet:
    """Immutable tree net with full per-path parameter storage."""
    arch: TreeArch
    leaf_params: Tuple[LeafParam, ...]
    node_params: Tuple[Tuple[NodeParam, ...], ...]
    precision_bits: int
    metadata: Dict[str, str] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        counts = self.arch.term_counts()
        if len(self.leaf_params) != counts[0]:
            raise ArgumentError(
                f"expected {counts[0]} leaf terms, got {len(self.leaf_params)}"
            )
        if len(self.node_params) != self.arch.L:
            raise ArgumentError(
                f"expected {self.arch.L} node layers, got {len(self.node_params)}"
            )
        for k, layer in enumerate(self.node_params, start=1):
            if len(layer) != counts[k]:
                raise ArgumentError(
                    f"layer {k}: expected {counts[k]} terms, got {len(layer)}"
                )

    @classmethod
    def zeros(cls, arch: TreeArch, precision_bits: int) -> "TreeNet":
        """All-zero net of the given architecture."""
        with precision(precision_bits):
            zero = mp.mpf(0)
            counts = arch.term_counts()
            return cls(
                arch=arch,
                leaf_params=tuple((zero, zero, zero) for _ in range(counts[0])),
                node_params=tuple(
                    tuple((zero, zero) for _ in range(counts[k]))
                    for k in range(1, arch.L + 1)
                ),
                precision_bits=precision_bits,
            )

    def __call__(self, x: Sequence[RealLike]) -> mpf:
        return evaluate(self, x)

    def iter_params(self) -> Iterator[Tuple[ParamRef, mpf]]:
        """Yield every stored scalar with its location."""
        for t, (a, w, b) in enumerate(self.leaf_params):
            yield ParamRef(0, t, "a"), a
            yield ParamRef(0, t, "w"), w
            yield ParamRef(0, t, "b"), b
        for k, layer in enumerate(self.node_params, start=1):
            for t, (a, b) in enumerate(layer):
                yield ParamRef(k, t, "a"), a
                yield ParamRef(k, t, "b"), b


def param_count(arch: TreeArch) -> int:
    """A_L = 2·Σ_k T_k + T_0: three scalars per leaf term, two per node term."""
    counts = arch.term_counts()
    return 2 * sum(counts) + counts[0]


def structural_count(net: TreeNet) -> int:
    """Count the scalars actually stored in ``net``."""
    return sum(1 for _ in net.iter_params())


def evaluate(net: TreeNet, x: Sequence[RealLike]) -> mpf:
    """
    Evaluate the net at one input point at the net's own precision.

    Activation values are memoized per (layer, argument); identical arguments
    give identical values, so the result is bit-identical to naive evaluation.

    Raises:
        ArgumentError: If len(x) differs from N_0
    """
    widths = net.arch.widths
    if len(x) != widths[0]:
        raise ArgumentError(f"input has dimension {len(x)}, net expects {widths[0]}")
    acts = net.arch.activations
    with precision(net.precision_bits):
        xs = [mp.mpf(v) for v in x]
        memo: Dict[Tuple[int, mpf], mpf] = {}

        def phi(k: int, arg: mpf) -> mpf:
            key = (k, arg)
            value = memo.get(key)
            if value is None:
                value = eval_derivative(acts[k], 0, arg)
                memo[key] = value
            return value

        n0 = widths[0]
        values: List[mpf] = []
        acc = mp.mpf(0)
        for t, (a, w, b) in enumerate(net.leaf_params):
            if a:
                acc += a * phi(0, w * xs[t % n0] + b)
            if t % n0 == n0 - 1:
                values.append(acc)
                acc = mp.mpf(0)

        for k in range(1, net.arch.L + 1):
            nk = widths[k]
            merged: List[mpf] = []
            acc = mp.mpf(0)
            for t, (a, b) in enumerate(net.node_params[k - 1]):
                if a:
                    acc += a * phi(k, values[t] + b)
                if t % nk == nk - 1:
                    merged.append(acc)
                    acc = mp.mpf(0)
            values = merged
        return values[0]


def eval_many(net: TreeNet, points: Sequence[Sequence[RealLike]]) -> List[mpf]:
    """Evaluate at many points; results are independent per point."""
    return [evaluate(net, x) for x in points]


def _numpy_kernel(act: Activation):
    name = act.name
    scale = act.scale
    if name == ActivationName.LOGISTIC:
        fn = lambda z: 0.5 * (1.0 + np.tanh(0.5 * z))
    elif name == ActivationName.TANH_SHIFTED:
        fn = lambda z: 0.5 * (1.0 + np.tanh(z))
    elif name == ActivationName.ARCTAN_SHIFTED:
        fn = lambda z: np.arctan(z) / np.pi + 0.5
    elif name == ActivationName.GOMPERTZ:
        def fn(z):
            with np.errstate(over="ignore"):
                return np.exp(-np.exp(-z))
    else:
        fn = lambda z: z
    return fn if scale == 1 else (lambda z: scale * fn(z))


def eval_float(net: TreeNet, points: np.ndarray) -> np.ndarray:
    """
    Vectorized 53-bit evaluation over an array of points of shape (P, d).

    Only meaningful when ``fast_path_allowed`` holds for the target accuracy.
    """
    X = np.atleast_2d(np.asarray(points, dtype=float))
    widths = net.arch.widths
    if X.shape[1] != widths[0]:
        raise ArgumentError(f"input has dimension {X.shape[1]}, net expects {widths[0]}")
    leaf = np.array([[float(v) for v in p] for p in net.leaf_params])
    a, w, b = leaf[:, 0], leaf[:, 1], leaf[:, 2]
    cols = np.arange(len(net.leaf_params)) % widths[0]
    phi0 = _numpy_kernel(net.arch.activations[0])
    H = (a * phi0(X[:, cols] * w + b)).reshape(X.shape[0], -1, widths[0]).sum(axis=2)
    for k in range(1, net.arch.L + 1):
        layer = np.array([[float(v) for v in p] for p in net.node_params[k - 1]])
        phik = _numpy_kernel(net.arch.activations[k])
        terms = layer[:, 0] * phik(H + layer[:, 1])
        H = terms.reshape(X.shape[0], -1, widths[k]).sum(axis=2)
    return H[:, 0]


def max_abs_weight(net: TreeNet) -> mpf:
    """Largest |a|, |w| or |b| stored in the net."""
    with precision(net.precision_bits):
        return max((abs(v) for _, v in net.iter_params()), default=mp.mpf(0))


def check_bounds(net: TreeNet, spec: BoundedClassSpec) -> BoundCheck:
    """
    Test membership in the bounded class: every |a|, |b|, |w| <= R·(A_L)^alpha.

    Returns:
        The verdict, the bound, and the largest-magnitude parameter
    """
    with precision(net.precision_bits):
        bound = spec.bound(net.arch)
        worst, worst_value = None, mp.mpf(-1)
        for ref, value in net.iter_params():
            if abs(value) > worst_value:
                worst, worst_value = ref, abs(value)
        ok = worst_value <= bound
        if not ok:
            logger.info("Bound %s exceeded by %s", mp.nstr(bound, 8), worst)
        return BoundCheck(ok=ok, bound=bound, worst=worst, worst_value=worst_value)


def covering_bound_log2(
    arch: TreeArch, spec: BoundedClassSpec, c1: RealLike, eps: RealLike
) -> mpf:
    """
    log2 of the covering-number bound
    (2^(L+5/2) c1^(L+3/2) (R·A_L^alpha)^(L+1) / eps)^(2 A_L).

    Raises:
        ArgumentError: If eps is outside (0, 1] or c1 <= 0
    """
    eps, c1 = mp.mpf(eps), mp.mpf(c1)
    if not 0 < eps <= 1:
        raise ArgumentError(f"eps must lie in (0, 1], got {mp.nstr(eps, 6)}")
    if c1 <= 0:
        raise ArgumentError("c1 must be positive")
    L = arch.L
    A = mp.mpf(param_count(arch))
    inner = (
        (L + mp.mpf(5) / 2)
        + (L + mp.mpf(3) / 2) * mp.log(c1, 2)
        + (L + 1) * (mp.log(spec.R, 2) + spec.alpha * mp.log(A, 2))
        - mp.log(eps, 2)
    )
    return 2 * A * inner


def coefficient_bits(net: TreeNet) -> mpf:
    """
    Bits of cancellation a root-to-leaf path can demand: the sum over layers
    of log2 max(1, max|a|), plus log2 max(1, max|w|) at the leaves.
    """
    with precision(max(net.precision_bits, 64)):
        one = mp.mpf(1)
        total = mp.log(max([one] + [abs(p[1]) for p in net.leaf_params]), 2)
        total += mp.log(max([one] + [abs(p[0]) for p in net.leaf_params]), 2)
        for layer in net.node_params:
            total += mp.log(max([one] + [abs(p[0]) for p in layer]), 2)
        return total


def required_precision_bits(net: TreeNet, target: RealLike) -> int:
    """Preflight estimate: coefficient bits + log2(1/target) + 64 guard bits."""
    target = mp.mpf(target)
    if target <= 0:
        raise ArgumentError("target error must be positive")
    return int(mp.ceil(coefficient_bits(net) - mp.log(target, 2))) + GUARD_BITS


def fast_path_allowed(net: TreeNet, eps: RealLike) -> bool:
    """True when max coefficient magnitude × 2^-52 < eps / 10."""
    return bool(mp.mpf(2) ** (coefficient_bits(net) - 52) < mp.mpf(eps) / 10)


def preflight(net: TreeNet, target: RealLike, ceiling: int) -> int:
    """
    Check that the net's precision suffices for ``target``.

    Returns:
        The required number of bits

    Raises:
        PrecisionError: If the requirement exceeds ``ceiling``
    """
    required = required_precision_bits(net, target)
    if required > ceiling:
        raise PrecisionError(
            f"evaluation to {mp.nstr(mp.mpf(target), 4)} needs {required} bits, "
            f"ceiling is {ceiling}",
            required_bits=required,
        )
    return required


class _ArchDocument(BaseModel):
    L: int
    widths: List[int]
    activations: List[str]
    theta0: Optional[str] = None
    scales: Optional[List[float]] = None
    max_derivative_orders: Optional[List[int]] = None


class _NetDocument(BaseModel):
    format_version: int
    arch: _ArchDocument
    precision_bits: int
    leaf_params: List[Tuple[str, str, str]]
    node_params: List[List[Tuple[str, str]]]
    metadata: Dict[str, str] = {}


def _digits(bits: int) -> int:
    return int(bits * 0.30103) + 3


def _activation_extras(arch: _ArchDocument, i: int) -> Dict[str, Any]:
    extras: Dict[str, Any] = {}
    if arch.scales is not None:
        extras["scale"] = arch.scales[i]
    if arch.max_derivative_orders is not None:
        extras["max_derivative_order"] = arch.max_derivative_orders[i]
    return extras


def serialize(net: TreeNet) -> Dict[str, Any]:
    """Render the net as a JSON-compatible document with decimal strings."""
    digits = _digits(net.precision_bits)
    with precision(net.precision_bits):
        fmt = lambda v: mp.nstr(v, digits, strip_zeros=False)
        anchors = {a.theta0 for a in net.arch.activations if a.is_sigmoidal and a.theta0}
        if len(anchors) > 1:
            raise ArgumentError("nets with several distinct θ0 anchors cannot be serialized")
        doc = _NetDocument(
            format_version=FORMAT_VERSION,
            arch=_ArchDocument(
                L=net.arch.L,
                widths=list(net.arch.widths),
                activations=[a.name.value for a in net.arch.activations],
                theta0=next(iter(anchors), None),
                scales=[a.scale for a in net.arch.activations],
                max_derivative_orders=[a.max_derivative_order for a in net.arch.activations],
            ),
            precision_bits=net.precision_bits,
            leaf_params=[tuple(fmt(v) for v in p) for p in net.leaf_params],
            node_params=[[tuple(fmt(v) for v in p) for p in layer] for layer in net.node_params],
            metadata=dict(net.metadata),
        )
    return doc.model_dump()


def deserialize(document: Dict[str, Any]) -> TreeNet:
    """
    Rebuild a net from ``serialize`` output.

    Raises:
        ParseError: On schema violations, with the offending location
    """
    if not isinstance(document, dict):
        raise ParseError("document must be an object")
    if "precision_bits" not in document:
        raise ParseError(
            "document has no precision_bits; it predates format version "
            f"{FORMAT_VERSION} and cannot be loaded without an explicit precision",
            location="$.precision_bits",
        )
    try:
        doc = _NetDocument.model_validate(document)
    except ValidationError as exc:
        first = exc.errors()[0]
        location = "$" + "".join(
            f"[{p}]" if isinstance(p, int) else f".{p}" for p in first["loc"]
        )
        raise ParseError(first["msg"], location=location) from exc
    if doc.format_version != FORMAT_VERSION:
        raise ParseError(
            f"unsupported format_version {doc.format_version}", location="$.format_version"
        )
    if len(doc.node_params) != doc.arch.L:
        raise ParseError(
            f"expected {doc.arch.L} node layers, found {len(doc.node_params)}",
            location="$.node_params",
        )
    count = len(doc.arch.activations)
    for field_name in ("scales", "max_derivative_orders"):
        values = getattr(doc.arch, field_name)
        if values is not None and len(values) != count:
            raise ParseError(
                f"expected {count} entries, found {len(values)}", location=f"$.arch.{field_name}"
            )
    try:
        activations = tuple(
            Activation(
                name=name,
                theta0=None if name == ActivationName.IDENTITY.value else doc.arch.theta0,
                **_activation_extras(doc.arch, i),
            )
            for i, name in enumerate(doc.arch.activations)
        )
        arch = TreeArch(L=doc.arch.L, widths=tuple(doc.arch.widths), activations=activations)
    except (ValidationError, ValueError) as exc:
        raise ParseError(str(exc), location="$.arch") from exc

    with precision(doc.precision_bits):
        try:
            leaf = tuple(tuple(mp.mpf(v) for v in p) for p in doc.leaf_params)
            nodes = tuple(
                tuple(tuple(mp.mpf(v) for v in p) for p in layer) for layer in doc.node_params
            )
        except ValueError as exc:
            raise ParseError(f"bad decimal: {exc}", location="$.params") from exc
        try:
            return TreeNet(
                arch=arch,
                leaf_params=leaf,
                node_params=nodes,
                precision_bits=doc.precision_bits,
                metadata=dict(doc.metadata),
            )
        except ArgumentError as exc:
            raise ParseError(str(exc), location="$.leaf_params") from exc


def save_net(net: TreeNet, path: Union[str, Path]) -> Path:
    """Write the net document as indented JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(serialize(net), indent=2) + "\n", encoding="utf-8")
    logger.info("Saved net with %d parameters to %s", param_count(net.arch), path)
    return path


def load_net(path: Union[str, Path]) -> TreeNet:
    """Read a net document written by ``save_net``."""
    try:
        document = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", location=f"line {exc.lineno}") from exc
    return deserialize(document)

