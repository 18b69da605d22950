"""Multi-criteria model ranking: TOPSIS with neurally learned weights.

The pipeline per (zone, season) context is: metric reports become a
decision matrix, columns are vector-normalized, weighted by a criterion
weight vector, and each model is scored by its closeness coefficient
CC = D-/(D+ + D-) between the ideal and anti-ideal points. Weights come
either from a static uniform vector or from a small softmax network
trained to reproduce entropy-method weights from per-column summary
features, which keeps the weighting data-driven and reproducible.
"""

import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

from .errors import NumericFault, ValidationError
from .metrics import METRIC_NAMES, MetricReport
from .rng import SplitMix64
from . import tensorcore as tc

# Higher is better for these; everything else enters as a cost (lower is
# better). Bias is folded to |bias| before it reaches the matrix, because
# vector normalization of a signed column would break cost monotonicity.
BENEFIT_METRICS = frozenset({"kge", "nse", "r", "r2", "pdf_overlap"})
COST_METRICS = frozenset({"bias", "rmse", "txx_err", "tnn_err", "sd_diff"})

# The nine default ranking criteria; r2 is available via config.
DEFAULT_CRITERIA_NAMES = (
    "bias",
    "rmse",
    "kge",
    "nse",
    "r",
    "pdf_overlap",
    "txx_err",
    "tnn_err",
    "sd_diff",
)


@dataclass(frozen=True)
class Criterion:
    name: str
    orientation: str = ""

    def __post_init__(self):
        if self.name not in METRIC_NAMES:
            raise ValidationError(f"unknown criterion {self.name!r}")
        if not self.orientation:
            orient = "benefit" if self.name in BENEFIT_METRICS else "cost"
            object.__setattr__(self, "orientation", orient)
        if self.orientation not in ("benefit", "cost"):
            raise ValidationError(f"orientation must be benefit or cost, got {self.orientation!r}")


def default_criteria(names: Sequence[str] = DEFAULT_CRITERIA_NAMES) -> List[Criterion]:
    return [Criterion(n) for n in names]


@dataclass(eq=False)
class DecisionMatrix:
    """Models x criteria value matrix for one (zone, season) context."""

    models: List[str]
    criteria: List[Criterion]
    values: np.ndarray
    context: Tuple[str, str] = ("", "")

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (len(self.models), len(self.criteria)):
            raise ValidationError(
                f"matrix shape {v.shape} does not match {len(self.models)} models x {len(self.criteria)} criteria"
            )
        if len(self.models) < 2:
            raise ValidationError("ranking needs at least 2 models")
        if len(set(self.models)) != len(self.models):
            raise ValidationError("duplicate model labels")
        if not np.all(np.isfinite(v)):
            raise ValidationError("decision matrix contains non-finite entries")
        self.values = v


@dataclass(frozen=True, eq=False)
class WeightVector:
    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.float64)
        if w.ndim != 1:
            raise ValidationError("weights must be a vector")
        if np.any(w < 0):
            raise ValidationError("weights must be nonnegative")
        if abs(float(np.sum(w)) - 1.0) > 1e-9:
            raise ValidationError(f"weights must sum to 1, got {float(np.sum(w))!r}")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    def __len__(self):
        return self.w.size


@dataclass(eq=False)
class RankingResult:
    """Closeness coefficients and derived ordering for one context."""

    context: Tuple[str, str]
    models: List[str]
    cc: np.ndarray
    d_plus: np.ndarray
    d_minus: np.ndarray
    order: List[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.order:
            # descending CC, ties broken lexicographically by model label
            idx = sorted(range(len(self.models)), key=lambda i: (-self.cc[i], self.models[i]))
            self.order = [self.models[i] for i in idx]

    def rank_of(self, label: str) -> int:
        return self.order.index(label) + 1


def assemble_matrix(
    reports: Sequence[Tuple[str, MetricReport]],
    criteria: Sequence[Criterion],
    context: Tuple[str, str] = ("", ""),
) -> DecisionMatrix:
    """Build the decision matrix from per-model reports.

    Bias enters as |bias|. Entries whose metric is flagged invalid are
    imputed with the worst valid value in their column (max for cost, min
    for benefit) so a degenerate metric can never reward a model; a column
    with no valid value at all is dropped with a warning.
    """
    if len(reports) < 2:
        raise ValidationError("ranking needs at least 2 models")
    labels = [label for label, _ in reports]
    cols = []
    kept: List[Criterion] = []
    for j, crit in enumerate(criteria):
        raw = []
        for _, rep in reports:
            v = rep.value(crit.name)
            if v is not None and crit.name == "bias":
                v = abs(v)
            raw.append(v)
        valid = [v for v in raw if v is not None]
        if not valid:
            warnings.warn(f"criterion {crit.name!r} has no valid value in context {context}; dropped")
            continue
        worst = max(valid) if crit.orientation == "cost" else min(valid)
        cols.append([worst if v is None else v for v in raw])
        kept.append(crit)
    if not kept:
        raise ValidationError(f"no usable criteria in context {context}")
    values = np.array(cols, dtype=np.float64).T
    return DecisionMatrix(models=labels, criteria=kept, values=values, context=context)


def normalize(matrix: Union[DecisionMatrix, np.ndarray]) -> np.ndarray:
    """Vector normalization per column: N_ij = C_ij / sqrt(sum_i C_ij^2).

    An all-zero column stays all-zero (the criterion becomes inert) instead
    of producing NaN.
    """
    c = matrix.values if isinstance(matrix, DecisionMatrix) else np.asarray(matrix, dtype=np.float64)
    norms = np.sqrt(np.sum(c * c, axis=0))
    out = np.zeros_like(c)
    nonzero = norms > 0
    out[:, nonzero] = c[:, nonzero] / norms[nonzero]
    return out


def topsis_score(
    n_matrix: np.ndarray,
    weights: WeightVector,
    criteria: Sequence[Criterion],
    models: Sequence[str],
    context: Tuple[str, str] = ("", ""),
) -> RankingResult:
    """Score every model by closeness to the ideal point.

    Weighted matrix W = w_j * N_ij; the ideal takes per-column max for
    benefit criteria and min for cost criteria (the anti-ideal the
    opposite); distances are Euclidean and CC = D-/(D+ + D-). When a model
    ties the ideal and anti-ideal simultaneously (all models identical),
    its CC is 0.5 by convention.
    """
    n_matrix = np.asarray(n_matrix, dtype=np.float64)
    if n_matrix.shape[1] != len(criteria):
        raise ValidationError("normalized matrix columns do not match criteria")
    if n_matrix.shape[0] != len(models):
        raise ValidationError("normalized matrix rows do not match models")
    if len(weights) != len(criteria):
        raise ValidationError("weight count does not match criteria")
    w = weights.w
    weighted = n_matrix * w[None, :]
    benefit = np.array([c.orientation == "benefit" for c in criteria])
    ideal = np.where(benefit, weighted.max(axis=0), weighted.min(axis=0))
    anti = np.where(benefit, weighted.min(axis=0), weighted.max(axis=0))
    d_plus = np.sqrt(np.sum((weighted - ideal[None, :]) ** 2, axis=1))
    d_minus = np.sqrt(np.sum((weighted - anti[None, :]) ** 2, axis=1))
    total = d_plus + d_minus
    cc = np.where(total > 0, d_minus / np.where(total > 0, total, 1.0), 0.5)
    return RankingResult(context=context, models=list(models), cc=cc, d_plus=d_plus, d_minus=d_minus)


def rank_matrix(dm: DecisionMatrix, weights: WeightVector) -> RankingResult:
    return topsis_score(normalize(dm), weights, dm.criteria, dm.models, dm.context)


def _minmax_column(col: np.ndarray) -> np.ndarray:
    lo, hi = float(np.min(col)), float(np.max(col))
    if hi == lo:
        return np.full_like(col, 0.5)
    return (col - lo) / (hi - lo)


def _column_entropy(col: np.ndarray) -> float:
    """Normalized Shannon entropy of the min-max-rescaled column.

    The rescaled column is renormalized to a probability vector; a constant
    column counts as perfectly uninformative (entropy 1). 0 * ln 0 is 0.
    """
    m = col.size
    if float(np.min(col)) == float(np.max(col)):
        return 1.0
    scaled = _minmax_column(col)
    total = float(np.sum(scaled))
    if total == 0.0:
        return 1.0
    p = scaled / total
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)) / math.log(m))


def entropy_target_weights(n_matrix: np.ndarray, criteria: Sequence[Criterion] = None) -> WeightVector:
    """Entropy-method weights: dispersion-rich columns earn more weight.

    Per column: min-max rescale, renormalize to a probability vector, take
    normalized entropy e_j; the weight is (1 - e_j) / sum_k (1 - e_k). If
    every column is uninformative the weights fall back to uniform.
    """
    n_matrix = np.asarray(n_matrix, dtype=np.float64)
    m, n = n_matrix.shape
    if m < 2:
        raise ValidationError("entropy weights need at least 2 models")
    d = np.array([1.0 - _column_entropy(n_matrix[:, j]) for j in range(n)])
    d = np.maximum(d, 0.0)
    total = float(np.sum(d))
    if total == 0.0:
        return WeightVector(np.full(n, 1.0 / n))
    return WeightVector(d / total)


def featurize(dm: DecisionMatrix) -> np.ndarray:
    """Fixed-length summary of a decision matrix for the weight network.

    Each column is min-max rescaled and summarized by (mean, sd, min, max,
    entropy), giving 5 features per criterion regardless of how many models
    the context holds.
    """
    feats = []
    for j in range(len(dm.criteria)):
        col = dm.values[:, j]
        scaled = _minmax_column(col)
        feats.extend(
            [
                float(np.mean(scaled)),
                float(np.std(scaled)),
                float(np.min(scaled)),
                float(np.max(scaled)),
                _column_entropy(col),
            ]
        )
    return np.array(feats, dtype=np.float64)


N_FEATURES_PER_CRITERION = 5


@dataclass
class WeightNetConfig:
    epochs: int = 50
    warm_epochs: int = 5  # SGD phase before Adam takes over
    batch_size: int = 32
    learning_rate: float = 1e-3
    seed: int = 7


class WeightNet:
    """Softmax criterion-weight network: features -> 64 -> 32 -> weights."""

    def __init__(self, n_criteria: int, seed: int = 7):
        self.n_criteria = n_criteria
        self.n_features = N_FEATURES_PER_CRITERION * n_criteria
        self.seed = seed
        rng = SplitMix64(seed)
        self.fc1 = tc.Dense(rng.split(), self.n_features, 64, "fc1")
        self.fc2 = tc.Dense(rng.split(), 64, 32, "fc2")
        self.fc3 = tc.Dense(rng.split(), 32, n_criteria, "fc3")
        self.step_count = 0

    def params(self):
        return self.fc1.params() + self.fc2.params() + self.fc3.params()

    def forward(self, features: np.ndarray) -> tc.Tensor:
        x = tc.Tensor(np.atleast_2d(features))
        h = self.fc1(x).relu()
        h = self.fc2(h).relu()
        return tc.softmax(self.fc3(h), axis=-1)

    def predict(self, features: np.ndarray) -> WeightVector:
        out = self.forward(features).data[0]
        # softmax guarantees nonnegativity; renormalize the float64 sum
        return WeightVector(out / out.sum())

    def save(self, path: str) -> None:
        entries = [(name, t.data) for name, t in self.params()]
        meta = {"kind": "weightnet", "n_criteria": self.n_criteria, "seed": self.seed, "step": self.step_count}
        tc.save_checkpoint(path, entries, meta)

    @classmethod
    def load(cls, path: str) -> "WeightNet":
        arrays, meta = tc.load_checkpoint(path)
        if meta.get("kind") != "weightnet":
            raise ValidationError(f"checkpoint at {path} is not a weight network")
        net = cls(int(meta["n_criteria"]), seed=int(meta["seed"]))
        net.step_count = int(meta.get("step", 0))
        for name, tensor in net.params():
            if name not in arrays:
                raise ValidationError(f"checkpoint missing parameter {name!r}")
            if arrays[name].shape != tensor.data.shape:
                raise ValidationError(f"checkpoint shape mismatch for {name!r}")
            tensor.data[...] = arrays[name]
        return net


def train_weightnet(
    contexts: Sequence[DecisionMatrix],
    config: WeightNetConfig = None,
) -> Tuple[WeightNet, List[float]]:
    """Fit the weight network to entropy-method targets across contexts.

    Training runs `warm_epochs` of SGD before switching to Adam (both at
    the configured learning rate) and logs the mean training MSE per epoch.
    Deterministic for a fixed config seed.
    """
    if not contexts:
        raise ValidationError("train_weightnet needs at least one context")
    config = config or WeightNetConfig()
    n_criteria = len(contexts[0].criteria)
    for dm in contexts:
        if len(dm.criteria) != n_criteria:
            raise ValidationError("all contexts must share the same criteria list")

    feats = np.stack([featurize(dm) for dm in contexts])
    targets = np.stack([entropy_target_weights(normalize(dm)).w for dm in contexts])

    net = WeightNet(n_criteria, seed=config.seed)
    params = [t for _, t in net.params()]
    sgd = tc.SGD(params, lr=config.learning_rate)
    adam = tc.Adam(params, lr=config.learning_rate)
    shuffler = SplitMix64(config.seed).split()

    history: List[float] = []
    n = feats.shape[0]
    for epoch in range(config.epochs):
        opt = sgd if epoch < config.warm_epochs else adam
        perm = shuffler.permutation(n)
        losses = []
        for lo in range(0, n, config.batch_size):
            idx = perm[lo : lo + config.batch_size]
            opt.zero_grad()
            pred = net.forward(feats[idx])
            loss = tc.mse(pred, targets[idx])
            loss.backward()
            opt.step()
            losses.append(loss.item())
        mean_loss = float(np.mean(losses))
        if not math.isfinite(mean_loss):
            raise NumericFault(f"weight-network training diverged at epoch {epoch + 1}")
        history.append(mean_loss)
        net.step_count += len(losses)
    return net, history


def evaluate_weightnet(net: WeightNet, contexts: Sequence[DecisionMatrix]) -> float:
    """Mean squared error of predicted vs entropy-target weights over contexts.

    Used to report held-out-context fit after training.
    """
    if not contexts:
        raise ValidationError("evaluate_weightnet needs at least one context")
    errs = []
    for dm in contexts:
        target = entropy_target_weights(normalize(dm)).w
        pred = net.predict(featurize(dm)).w
        errs.append(float(np.mean((pred - target) ** 2)))
    return float(np.mean(errs))


WeightSource = Union[str, WeightNet]


def resolve_weights(dm: DecisionMatrix, source: WeightSource) -> Tuple[WeightVector, str]:
    """Weight vector for one context from a named source.

    `source` is either the string "uniform" or a trained WeightNet. A net
    whose criteria count disagrees with the context falls back to uniform
    with a warning (this can happen when a degenerate context dropped a
    column).
    """
    n = len(dm.criteria)
    if source == "uniform":
        return WeightVector(np.full(n, 1.0 / n)), "uniform"
    if isinstance(source, WeightNet):
        if source.n_criteria != n:
            warnings.warn(
                f"context {dm.context} has {n} criteria but the weight net expects "
                f"{source.n_criteria}; using uniform weights"
            )
            return WeightVector(np.full(n, 1.0 / n)), "uniform(fallback)"
        return source.predict(featurize(dm)), "weightnet"
    raise ValidationError(f"unknown weight source {source!r}")


def rank_all(
    reports: Dict[Tuple[str, str], List[Tuple[str, MetricReport]]],
    weight_source: WeightSource = "uniform",
    criteria: Sequence[Criterion] = None,
) -> Tuple[List[RankingResult], Dict[Tuple[str, str], Tuple[WeightVector, str]], List[dict]]:
    """Rank every context and assemble heatmap and top-5 table data.

    `reports` maps (zone, season) contexts to per-model metric reports.
    Returns the per-context results, the weight vector actually used per
    context, and top-5 rows carrying each model's raw headline metrics.
    """
    if not reports:
        raise ValidationError("no contexts to rank")
    criteria = list(criteria) if criteria else default_criteria()
    results: List[RankingResult] = []
    weights_used: Dict[Tuple[str, str], Tuple[WeightVector, str]] = {}
    top5_rows: List[dict] = []
    for context in sorted(reports):
        model_reports = reports[context]
        dm = assemble_matrix(model_reports, criteria, context=context)
        wv, source_name = resolve_weights(dm, weight_source)
        res = rank_matrix(dm, wv)
        results.append(res)
        weights_used[context] = (wv, source_name)
        by_label = dict(model_reports)
        for rank, label in enumerate(res.order[:5], start=1):
            rep = by_label[label]
            top5_rows.append(
                {
                    "zone": context[0],
                    "season": context[1],
                    "rank": rank,
                    "model": label,
                    "score": float(res.cc[res.models.index(label)]),
                    "bias": rep.bias,
                    "rmse": rep.rmse,
                    "kge": rep.kge,
                    "nse": rep.nse,
                    "pdf_overlap": rep.pdf_overlap,
                }
            )
    return results, weights_used, top5_rows


def heatmap_table(results: Sequence[RankingResult]) -> Tuple[List[str], List[str], np.ndarray]:
    """Models x contexts matrix of closeness coefficients."""
    if not results:
        raise ValidationError("no ranking results")
    models = sorted(results[0].models)
    contexts = []
    matrix = np.zeros((len(models), len(results)))
    for j, res in enumerate(results):
        if sorted(res.models) != models:
            raise ValidationError("ranking results cover different model sets")
        contexts.append(f"{res.context[0]}/{res.context[1]}")
        for i, label in enumerate(models):
            matrix[i, j] = res.cc[res.models.index(label)]
    return models, contexts, matrix
