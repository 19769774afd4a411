"""
Approximate empirical risk minimization over tree nets.

Samples are drawn uniformly from the unit ball with bounded noise, a torch
mirror of the tree layout is fit with multi-restart Adam, and the excess risk
of the truncated estimator is measured by Monte Carlo. Training runs in
float64; only constructive nets need the arbitrary-precision path.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import torch
from mpmath import mp
from pydantic import BaseModel, Field, model_validator
from torch import nn

from radial_deep_nets.activations import Activation
from radial_deep_nets.config import ActivationName, config
from radial_deep_nets.exceptions import ArgumentError, ConfigurationError, TrainingError
from radial_deep_nets.numeric_core import fit_loglog_slope, make_rng, precision, uniform_ball
from radial_deep_nets.radial_builder import RadialTarget, class_widths
from radial_deep_nets.tree_net import TreeArch, TreeNet, eval_float, param_count
from radial_deep_nets.univariate_builder import target_sup

logger = logging.getLogger(__name__)

Predictor = Callable[[np.ndarray], np.ndarray]


class NoiseKind(str, Enum):
    NONE = "none"
    BOUNDED_UNIFORM = "bounded-uniform"


@dataclass(frozen=True)
class Sample:
    """One observation (x, y) with |x| <= 1 and |y| <= M."""
    x: np.ndarray
    y: float


class LearningConfig(BaseModel):
    """Sampling, architecture and optimizer settings for one learning run."""
    m: int = Field(default=256, ge=1)
    d: int = Field(default=2, ge=2)
    r: float = Field(default=1.0, gt=0)
    c0: float = Field(default=1.0, gt=0)
    M: float = Field(default=1.0, gt=0)
    noise: NoiseKind = NoiseKind.NONE
    sigma: float = Field(default=0.0, ge=0)
    C: float = Field(default=1.0, gt=0)
    activation: ActivationName = Field(default_factory=lambda: config.activation)
    steps: int = Field(default=2000, ge=1)
    restarts: int = Field(default=3, ge=1)
    lr: float = Field(default=1e-2, gt=0)
    lr_decay: float = Field(default=0.999, gt=0, le=1)
    lr_floor: float = Field(default=1e-4, ge=0)
    tol: float = Field(default=1e-12, ge=0)
    polish_steps: int = Field(default=200, ge=0)
    batch_size: int = Field(default=128, ge=1)
    alpha: float = Field(default=1.0, ge=1)
    R: float = Field(default=1.0, ge=1)
    n_test: int = Field(default=2000, ge=1)
    seed: int = Field(default_factory=lambda: config.seed)
    workers: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _check_noise(self) -> "LearningConfig":
        if self.noise == NoiseKind.NONE and self.sigma:
            raise ValueError("sigma must be 0 when noise is 'none'")
        return self


def n_rule(m: int, r: float, C: float = 1.0) -> int:
    """n = ⌊C·m^(1/(2r+1))⌋, at least 1."""
    return max(1, int(math.floor(C * m ** (1.0 / (2 * r + 1)))))


def theory_slope(r: float) -> float:
    """Excess-risk exponent −2r/(2r+1)."""
    return -2 * r / (2 * r + 1)


def truncate(v: Union[float, np.ndarray], M: float) -> Union[float, np.ndarray]:
    """π_M v = sign(v)·min(|v|, M)."""
    if M <= 0:
        raise ArgumentError("M must be positive")
    if isinstance(v, np.ndarray):
        return np.clip(v, -M, M)
    return float(min(max(v, -M), M))


def target_values(f_rho: RadialTarget, X: np.ndarray) -> np.ndarray:
    """f_ρ on each row of X, evaluated at 53 bits."""
    with precision(53):
        return np.array([float(f_rho([float(c) for c in row])) for row in X])


def sample_dataset(f_rho: RadialTarget, cfg: LearningConfig, trial: int = 0) -> List[Sample]:
    """
    Draw m samples x uniform on the unit ball, y = f_ρ(x) + noise clipped to [−M, M].

    Raises:
        ConfigurationError: If ‖f_ρ‖∞ + σ exceeds M
    """
    with precision(53):
        sup = float(target_sup(f_rho.g))
    if sup + cfg.sigma > cfg.M:
        raise ConfigurationError(
            f"noise σ={cfg.sigma} with ‖f‖∞={sup:.4g} does not fit in M={cfg.M}"
        )
    rng = make_rng(cfg.seed, 0xDA7A, cfg.m, trial)
    X = uniform_ball(rng, f_rho.d, cfg.m)
    y = target_values(f_rho, X)
    if cfg.noise == NoiseKind.BOUNDED_UNIFORM:
        y = y + rng.uniform(-cfg.sigma, cfg.sigma, cfg.m)
    y = np.clip(y, -cfg.M, cfg.M)
    return [Sample(x=X[i], y=float(y[i])) for i in range(cfg.m)]


def _torch_kernel(act: Activation) -> Callable[[torch.Tensor], torch.Tensor]:
    name = act.name
    if name == ActivationName.LOGISTIC:
        fn = torch.sigmoid
    elif name == ActivationName.TANH_SHIFTED:
        fn = lambda z: 0.5 * (torch.tanh(z) + 1.0)
    elif name == ActivationName.ARCTAN_SHIFTED:
        fn = lambda z: torch.atan(z) / math.pi + 0.5
    elif name == ActivationName.GOMPERTZ:
        fn = lambda z: torch.exp(-torch.exp(-z))
    else:
        fn = lambda z: z
    scale = act.scale
    return fn if scale == 1 else (lambda z: scale * fn(z))


class TorchTreeNet(nn.Module):
    """Float64 tree net with one parameter tensor per layer and field."""

    def __init__(self, arch: TreeArch, generator: Optional[torch.Generator] = None):
        super().__init__()
        self.arch = arch
        counts = arch.term_counts()
        dtype = torch.float64

        def init(size: int, std: float) -> nn.Parameter:
            return nn.Parameter(torch.randn(size, generator=generator, dtype=dtype) * std)

        self.leaf_a = init(counts[0], 1.0 / math.sqrt(arch.widths[0]))
        self.leaf_w = init(counts[0], 1.0)
        self.leaf_b = init(counts[0], 1.0)
        self.node_a = nn.ParameterList(
            [init(counts[k], 1.0 / math.sqrt(arch.widths[k])) for k in range(1, arch.L + 1)]
        )
        self.node_b = nn.ParameterList([init(counts[k], 1.0) for k in range(1, arch.L + 1)])
        self._kernels = [_torch_kernel(a) for a in arch.activations]
        self.register_buffer("_columns", torch.arange(counts[0]) % arch.widths[0])

    def forward(self, X: torch.Tensor) -> torch.Tensor:
        batch = X.shape[0]
        widths = self.arch.widths
        z = X[:, self._columns] * self.leaf_w + self.leaf_b
        H = (self.leaf_a * self._kernels[0](z)).view(batch, -1, widths[0]).sum(dim=2)
        for k in range(1, self.arch.L + 1):
            terms = self.node_a[k - 1] * self._kernels[k](H + self.node_b[k - 1])
            H = terms.view(batch, -1, widths[k]).sum(dim=2)
        return H[:, 0]

    def clamp_(self, box: float) -> None:
        with torch.no_grad():
            for p in self.parameters():
                p.clamp_(-box, box)

    def to_tree_net(self, precision_bits: int = 53) -> TreeNet:
        """Lift the float64 parameters exactly into a TreeNet."""
        with precision(precision_bits):
            lift = lambda t: [mp.mpf(float(v)) for v in t.detach().cpu().tolist()]
            leaves = tuple(zip(lift(self.leaf_a), lift(self.leaf_w), lift(self.leaf_b)))
            nodes = tuple(
                tuple(zip(lift(a), lift(b))) for a, b in zip(self.node_a, self.node_b)
            )
            return TreeNet(self.arch, leaves, nodes, precision_bits)

    @classmethod
    def from_tree_net(cls, net: TreeNet) -> "TorchTreeNet":
        model = cls(net.arch)
        with torch.no_grad():
            leaf = torch.tensor([[float(v) for v in p] for p in net.leaf_params], dtype=torch.float64)
            model.leaf_a.copy_(leaf[:, 0])
            model.leaf_w.copy_(leaf[:, 1])
            model.leaf_b.copy_(leaf[:, 2])
            for k, layer in enumerate(net.node_params):
                values = torch.tensor([[float(v) for v in p] for p in layer], dtype=torch.float64)
                model.node_a[k].copy_(values[:, 0])
                model.node_b[k].copy_(values[:, 1])
        return model


@dataclass
class TrainResult:
    """Best restart of one training call."""
    model: TorchTreeNet
    loss: float
    restart: int
    diagnostics: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def net(self) -> TreeNet:
        return self.model.to_tree_net()


def parameter_box(arch: TreeArch, alpha: float, R: float) -> float:
    """R·(A_L)^α, or inf when it leaves float range."""
    log_box = math.log(R) + alpha * math.log(param_count(arch))
    return math.exp(log_box) if log_box < 700 else math.inf


def _restart_seed(seed: int, trial: int, restart: int) -> int:
    return int(make_rng(seed, 0x7EA1, trial, restart).integers(0, 2**62))


def _full_loss(model: TorchTreeNet, X: torch.Tensor, y: torch.Tensor) -> float:
    with torch.no_grad():
        return float(torch.mean((model(X) - y) ** 2))


def _polish(model: TorchTreeNet, X: torch.Tensor, y: torch.Tensor, cfg: LearningConfig, box: float) -> None:
    """Full-batch LBFGS from the Adam iterate; the Adam state is restored if it does not improve."""
    before = _full_loss(model, X, y)
    if not math.isfinite(before) or before <= cfg.tol:
        return
    saved = {k: v.clone() for k, v in model.state_dict().items()}
    optimizer = torch.optim.LBFGS(
        model.parameters(),
        max_iter=cfg.polish_steps,
        tolerance_grad=1e-14,
        tolerance_change=1e-20,
        history_size=20,
        line_search_fn="strong_wolfe",
    )

    def closure() -> torch.Tensor:
        optimizer.zero_grad()
        loss = torch.mean((model(X) - y) ** 2)
        loss.backward()
        return loss

    optimizer.step(closure)
    model.clamp_(box)
    after = _full_loss(model, X, y)
    if not math.isfinite(after) or after > before:
        model.load_state_dict(saved)


def train_erm(
    arch: TreeArch, data: Sequence[Sample], cfg: LearningConfig, trial: int = 0
) -> TrainResult:
    """
    Approximate ERM for the squared loss by multi-restart mini-batch Adam.

    Each restart draws its initialization and batch order from (seed, trial,
    restart), so raising ``cfg.restarts`` only adds candidates. The step size
    decays geometrically down to ``cfg.lr_floor`` and a restart stops early once
    its full-batch loss reaches ``cfg.tol``. When one batch covers the data, a
    full-batch LBFGS polish follows. Parameters are clamped to the R·A_L^α box
    after every step, and the restart with the lowest loss is kept.

    Raises:
        ArgumentError: If ``data`` is empty
        TrainingError: If every restart diverges
    """
    if not data:
        raise ArgumentError("training data is empty")
    X = torch.tensor(np.stack([s.x for s in data]), dtype=torch.float64)
    y = torch.tensor([s.y for s in data], dtype=torch.float64)
    box = parameter_box(arch, cfg.alpha, cfg.R)
    batch = min(cfg.batch_size, len(data))
    full_batch = batch == len(data)
    floor = min(1.0, cfg.lr_floor / cfg.lr)

    best: Optional[TrainResult] = None
    diagnostics: List[Dict[str, Any]] = []
    for restart in range(cfg.restarts):
        generator = torch.Generator().manual_seed(_restart_seed(cfg.seed, trial, restart))
        model = TorchTreeNet(arch, generator)
        optimizer = torch.optim.Adam(model.parameters(), lr=cfg.lr)
        scheduler = torch.optim.lr_scheduler.LambdaLR(
            optimizer, lambda k: max(cfg.lr_decay**k, floor)
        )
        diverged = False
        step = 0
        for step in range(cfg.steps):
            idx = torch.randperm(len(data), generator=generator)[:batch]
            optimizer.zero_grad()
            loss = torch.mean((model(X[idx]) - y[idx]) ** 2)
            if not torch.isfinite(loss):
                diverged = True
                diagnostics.append({"restart": restart, "step": step, "loss": float(loss)})
                break
            if full_batch and float(loss) <= cfg.tol:
                break
            loss.backward()
            optimizer.step()
            scheduler.step()
            model.clamp_(box)
            if not full_batch and step % 100 == 99 and _full_loss(model, X, y) <= cfg.tol:
                break

        if diverged:
            logger.warning("Restart %d diverged", restart)
            continue
        if full_batch and cfg.polish_steps:
            _polish(model, X, y, cfg, box)
        final = _full_loss(model, X, y)
        diagnostics.append({"restart": restart, "step": step + 1, "loss": final})
        if not math.isfinite(final):
            continue
        logger.debug("Restart %d finished with training loss %.3e", restart, final)
        if best is None or final < best.loss:
            best = TrainResult(model=model, loss=final, restart=restart)

    if best is None:
        raise TrainingError(f"all {cfg.restarts} restarts diverged", diagnostics=diagnostics)
    best.diagnostics = diagnostics
    return best


def as_predictor(net: Union[TreeNet, TorchTreeNet, Predictor]) -> Predictor:
    """Wrap a TreeNet, TorchTreeNet or array function as X ↦ predictions."""
    if isinstance(net, TreeNet):
        return lambda X: eval_float(net, X)
    if isinstance(net, TorchTreeNet):
        def predict(X: np.ndarray) -> np.ndarray:
            with torch.no_grad():
                return net(torch.tensor(X, dtype=torch.float64)).numpy()
        return predict
    return net


def excess_risk(
    net: Union[TreeNet, TorchTreeNet, Predictor],
    f_rho: RadialTarget,
    M: float,
    n_test: int,
    seed: int = 0,
    truncated: bool = True,
) -> Tuple[float, float]:
    """
    Monte-Carlo estimate of ∫(π_M net(x) − f_ρ(x))² dx over the uniform ball.

    Returns:
        The estimate and its standard error
    """
    if n_test < 1:
        raise ArgumentError("n_test must be at least 1")
    rng = make_rng(seed, 0x7E57)
    X = uniform_ball(rng, f_rho.d, n_test)
    predictions = np.asarray(as_predictor(net)(X), dtype=float)
    if truncated:
        predictions = truncate(predictions, M)
    squared = (predictions - target_values(f_rho, X)) ** 2
    stderr = float(squared.std(ddof=1) / math.sqrt(n_test)) if n_test > 1 else 0.0
    return float(squared.mean()), stderr


@dataclass
class RateTable:
    """Per-m medians of the excess risk with the fitted log-log slope."""
    rows: pd.DataFrame
    slope: float
    theory_slope: float

    COLUMNS = ("m", "n", "trials", "median_excess_risk", "stderr")

    def to_frame(self) -> pd.DataFrame:
        """
        Rows plus a trailing row with m = 'slope'. That row holds the fitted
        slope under median_excess_risk and −2r/(2r+1) under theory_slope.
        """
        frame = self.rows.astype(object).assign(theory_slope="")
        slope_row = pd.DataFrame([{
            "m": "slope", "n": "", "trials": "", "median_excess_risk": self.slope,
            "stderr": "", "theory_slope": self.theory_slope,
        }])
        return pd.concat([frame, slope_row], ignore_index=True)


def _train_trials(
    arch: TreeArch, datasets: Sequence[List[Sample]], cfg: LearningConfig
) -> List[TrainResult]:
    """
    Train one model per trial. With ``cfg.workers`` > 1 the trials run on a
    thread pool; every trial seeds its own generators, so results do not depend
    on the worker count.
    """
    jobs = list(enumerate(datasets))
    if cfg.workers == 1 or len(jobs) == 1:
        return [train_erm(arch, data, cfg, trial) for trial, data in jobs]
    with ThreadPoolExecutor(max_workers=min(cfg.workers, len(jobs))) as pool:
        return list(pool.map(lambda job: train_erm(arch, job[1], cfg, job[0]), jobs))


def rate_sweep(
    f_rho: RadialTarget, m_list: Sequence[int], trials: int, cfg: LearningConfig
) -> RateTable:
    """
    For each m, set n by the n-rule, train on ``trials`` fresh samples and
    record the median excess risk.

    Sampling and risk measurement evaluate f_ρ under mpmath, whose precision
    is process-global, so they stay on the calling thread; only the torch
    training fans out over ``cfg.workers``.

    Raises:
        ArgumentError: If m_list is not increasing or trials < 3
    """
    m_list = list(m_list)
    if not m_list or any(b <= a for a, b in zip(m_list, m_list[1:])):
        raise ArgumentError("m_list must be non-empty and strictly increasing")
    if trials < 3:
        raise ArgumentError("rate_sweep needs at least 3 trials")
    act = Activation(name=cfg.activation)
    s = f_rho.g.s
    rows = []
    for m in m_list:
        run = cfg.model_copy(update={"m": m, "d": f_rho.d})
        n = n_rule(m, cfg.r, cfg.C)
        arch = TreeArch.uniform(class_widths(f_rho.d, s, n), act)
        datasets = [sample_dataset(f_rho, run, trial) for trial in range(trials)]
        results = _train_trials(arch, datasets, run)
        risks_arr = np.asarray([
            excess_risk(result.model, f_rho, cfg.M, cfg.n_test, seed=cfg.seed + trial)[0]
            for trial, result in enumerate(results)
        ])
        rows.append({
            "m": m,
            "n": n,
            "trials": trials,
            "median_excess_risk": float(np.median(risks_arr)),
            "stderr": float(risks_arr.std(ddof=1) / math.sqrt(trials)),
        })
        logger.info("m=%d n=%d median excess risk %.4e", m, n, rows[-1]["median_excess_risk"])

    frame = pd.DataFrame(rows, columns=list(RateTable.COLUMNS))
    medians = frame["median_excess_risk"].tolist()
    slope = (
        fit_loglog_slope(frame["m"].tolist(), medians)
        if len(rows) >= 2 and all(v > 0 for v in medians)
        else float("nan")
    )
    return RateTable(rows=frame, slope=slope, theory_slope=theory_slope(cfg.r))
