"""Linear probes over frozen per-layer token representations.

A probe sees a document only through span endpoints: each node is
represented by the concatenation of its first and last token vectors,
each vector a learned softmax-weighted mix of the encoder's layers
times a shared scale. Single-node tasks classify one span (2d
features), pair tasks concatenate two (4d). The classifier head, the
mix weights and the scale train jointly; representations stay frozen.

All arithmetic is float64 and fully deterministic for a given seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .bundles import ReprBundle, check_alignment
from .errors import ConfigError, UnknownNodeError, ValidationError
from .infusion import LinearizedDocument
from .probegen import ProbeDataset, ProbeInstance, SPLITS
from .seeding import derive_rng

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class TrainSpec:
    """Optimization settings; defaults follow the reference setup."""

    learning_rate: float = 1e-3
    batch_size: int = 4
    max_epochs: int = 20
    patience: int = 10
    weight_decay: float = 0.01
    train_scale: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.batch_size < 1 or self.max_epochs < 1 or self.patience < 1:
            raise ConfigError("batch_size, max_epochs, patience must be >= 1")
        if self.weight_decay < 0:
            raise ConfigError("weight_decay must be non-negative")


@dataclass(frozen=True)
class ProbeModel:
    task: str
    labels: tuple
    mix_logits: np.ndarray   # (L,)
    mix_scale: float
    weight: np.ndarray       # (feature_dim, n_labels)
    bias: np.ndarray         # (n_labels,)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "mix_logits", np.asarray(self.mix_logits, dtype=np.float64)
        )
        object.__setattr__(self, "weight", np.asarray(self.weight, dtype=np.float64))
        object.__setattr__(self, "bias", np.asarray(self.bias, dtype=np.float64))
        if len(self.labels) < 2:
            raise ValidationError("a probe needs at least two labels")
        if self.weight.shape != (self.weight.shape[0], len(self.labels)):
            raise ValidationError("weight column count must match labels")
        if self.bias.shape != (len(self.labels),):
            raise ValidationError("bias length must match labels")

    @property
    def layer_count(self) -> int:
        return len(self.mix_logits)


def _softmax(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def scalar_mix(
    bundle: ReprBundle,
    token_index: int,
    mix_logits: np.ndarray,
    mix_scale: float,
) -> np.ndarray:
    """Scale times the softmax-weighted average of one token's layers."""
    mix_logits = np.asarray(mix_logits, dtype=np.float64)
    if mix_logits.shape != (bundle.layer_count,):
        raise ValidationError(
            f"mix over {mix_logits.shape} layers does not fit bundle with "
            f"{bundle.layer_count}"
        )
    if not 0 <= token_index < bundle.n_tokens:
        raise ValidationError(f"token index {token_index} out of range")
    weights = _softmax(mix_logits)
    column = bundle.layers[:, token_index, :].astype(np.float64)
    return mix_scale * (weights @ column)


def span_repr(
    bundle: ReprBundle,
    span: tuple[int, int],
    mix_logits: np.ndarray,
    mix_scale: float,
) -> np.ndarray:
    """Concatenated mixed vectors of a span's first and last tokens (2d)."""
    start, end = span
    if start > end:
        raise ValidationError(f"empty span {span}")
    return np.concatenate(
        [
            scalar_mix(bundle, start, mix_logits, mix_scale),
            scalar_mix(bundle, end, mix_logits, mix_scale),
        ]
    )


def layer_utilization(model: ProbeModel) -> np.ndarray:
    """Learned layer weights as a distribution summing to one."""
    return _softmax(model.mix_logits)


# -- feature extraction -----------------------------------------------------------


def _endpoint_columns(
    instance: ProbeInstance,
    bundles: Mapping[str, ReprBundle],
    lins: Mapping[str, LinearizedDocument],
) -> np.ndarray:
    """Layer-major endpoint stack, shape (L, 2·arity·d), unmixed."""
    if instance.doc_id not in bundles:
        raise ValidationError(f"no bundle for document {instance.doc_id!r}")
    if instance.doc_id not in lins:
        raise ValidationError(f"no linearization for document {instance.doc_id!r}")
    bundle = bundles[instance.doc_id]
    lin = lins[instance.doc_id]
    check_alignment(bundle, len(lin.tokens))
    parts = []
    for node_id in instance.node_ids:
        if node_id not in lin.node_spans:
            raise UnknownNodeError(
                f"node {node_id!r} has no span in document {instance.doc_id!r}"
            )
        start, end = lin.node_spans[node_id]
        parts.append(bundle.layers[:, start, :])
        parts.append(bundle.layers[:, end, :])
    return np.concatenate(parts, axis=1).astype(np.float64)


def _canonical_labels(values) -> tuple:
    distinct = set(values)
    if all(isinstance(v, bool) for v in distinct):
        return (False, True)
    if all(isinstance(v, bool) or isinstance(v, int) for v in distinct):
        return tuple(sorted(distinct))
    if all(isinstance(v, str) for v in distinct):
        return tuple(sorted(distinct))
    raise ValidationError(f"mixed label types: {sorted(map(repr, distinct))}")


def _prepare(
    instances: Sequence[ProbeInstance],
    bundles: Mapping[str, ReprBundle],
    lins: Mapping[str, LinearizedDocument],
    label_index: Mapping,
) -> tuple[np.ndarray, np.ndarray]:
    feats = np.stack([_endpoint_columns(i, bundles, lins) for i in instances])
    targets = np.array([label_index[i.label] for i in instances], dtype=np.intp)
    return feats, targets


# -- loss and gradients -----------------------------------------------------------


def loss_and_grads(
    mix_logits: np.ndarray,
    mix_scale: float,
    weight: np.ndarray,
    bias: np.ndarray,
    feats: np.ndarray,
    targets: np.ndarray,
) -> tuple[float, dict[str, np.ndarray | float]]:
    """Mean cross-entropy over a batch and its analytic gradients.

    feats has shape (B, L, D) with D the concatenated endpoint width.
    Weight decay is decoupled from the loss; it never appears here.
    """
    batch = feats.shape[0]
    mix_weights = _softmax(mix_logits)
    unscaled = np.einsum("l,bld->bd", mix_weights, feats)
    reps = mix_scale * unscaled
    logits = reps @ weight + bias
    probs = _softmax(logits)
    picked = probs[np.arange(batch), targets]
    loss = float(-np.log(picked).mean())

    delta = probs.copy()
    delta[np.arange(batch), targets] -= 1.0
    delta /= batch
    grad_weight = reps.T @ delta
    grad_bias = delta.sum(axis=0)
    grad_reps = delta @ weight.T
    grad_scale = float(np.einsum("bd,bd->", grad_reps, unscaled))
    # chain through the softmax over layers
    grad_mixw = mix_scale * np.einsum("bd,bld->l", grad_reps, feats)
    grad_logits = mix_weights * (grad_mixw - float(grad_mixw @ mix_weights))
    return loss, {
        "mix_logits": grad_logits,
        "mix_scale": grad_scale,
        "weight": grad_weight,
        "bias": grad_bias,
    }


class _Adam:
    """Adam with decoupled weight decay applied only where requested."""

    def __init__(self, shapes: Mapping[str, tuple], spec: TrainSpec) -> None:
        self.spec = spec
        self.step = 0
        self.m = {k: np.zeros(s) for k, s in shapes.items()}
        self.v = {k: np.zeros(s) for k, s in shapes.items()}

    def update(self, params: dict, grads: Mapping, decayed: frozenset) -> None:
        self.step += 1
        lr = self.spec.learning_rate
        for key, grad in grads.items():
            grad = np.asarray(grad, dtype=np.float64)
            self.m[key] = ADAM_BETA1 * self.m[key] + (1 - ADAM_BETA1) * grad
            self.v[key] = ADAM_BETA2 * self.v[key] + (1 - ADAM_BETA2) * grad**2
            m_hat = self.m[key] / (1 - ADAM_BETA1**self.step)
            v_hat = self.v[key] / (1 - ADAM_BETA2**self.step)
            step = lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
            if key in decayed:
                step = step + lr * self.spec.weight_decay * params[key]
            params[key] = params[key] - step


def _accuracy(
    params: dict, feats: np.ndarray, targets: np.ndarray
) -> float:
    mix_weights = _softmax(params["mix_logits"])
    reps = params["mix_scale"] * np.einsum("l,bld->bd", mix_weights, feats)
    logits = reps @ params["weight"] + params["bias"]
    # argmax takes the first maximum: ties resolve to the lowest index
    predicted = np.argmax(logits, axis=1)
    return float((predicted == targets).mean())


def train_probe(
    dataset: ProbeDataset,
    bundles: Mapping[str, ReprBundle],
    lins: Mapping[str, LinearizedDocument],
    spec: TrainSpec = TrainSpec(),
) -> tuple[ProbeModel, float]:
    """Fit a probe on the train split, early-stopping on dev accuracy.

    Returns the best-dev model and its dev accuracy. Every label in the
    dataset must occur in the train split.
    """
    train = [i for i in dataset.instances if i.split == "train"]
    dev = [i for i in dataset.instances if i.split == "dev"]
    if not train:
        raise ValidationError("empty train split")
    if not dev:
        raise ValidationError("empty dev split")
    labels = _canonical_labels(i.label for i in dataset.instances)
    train_labels = {i.label for i in train}
    missing = [l for l in labels if l not in train_labels]
    if missing:
        raise ValidationError(f"labels absent from train split: {missing}")
    label_index = {label: k for k, label in enumerate(labels)}

    train_feats, train_targets = _prepare(train, bundles, lins, label_index)
    dev_feats, dev_targets = _prepare(dev, bundles, lins, label_index)
    layer_count, feat_dim = train_feats.shape[1], train_feats.shape[2]

    params: dict = {
        "mix_logits": np.zeros(layer_count),
        "mix_scale": 1.0,
        "weight": np.zeros((feat_dim, len(labels))),
        "bias": np.zeros(len(labels)),
    }
    optimizer = _Adam({k: np.shape(v) for k, v in params.items()}, spec)
    decayed = frozenset(["weight"])

    best = {k: np.copy(v) for k, v in params.items()}
    best_acc = _accuracy(params, dev_feats, dev_targets)
    stale = 0
    order = list(range(len(train)))
    for epoch in range(spec.max_epochs):
        derive_rng(spec.seed, dataset.task, "probe-train", epoch).shuffle(order)
        for start in range(0, len(order), spec.batch_size):
            chosen = order[start : start + spec.batch_size]
            _, grads = loss_and_grads(
                params["mix_logits"],
                params["mix_scale"],
                params["weight"],
                params["bias"],
                train_feats[chosen],
                train_targets[chosen],
            )
            if not spec.train_scale:
                grads.pop("mix_scale")
            optimizer.update(params, grads, decayed)
        acc = _accuracy(params, dev_feats, dev_targets)
        if acc > best_acc:
            best_acc = acc
            best = {k: np.copy(v) for k, v in params.items()}
            stale = 0
        else:
            stale += 1
            if stale >= spec.patience:
                break

    model = ProbeModel(
        task=dataset.task,
        labels=labels,
        mix_logits=best["mix_logits"],
        mix_scale=float(best["mix_scale"]),
        weight=best["weight"],
        bias=best["bias"],
    )
    return model, best_acc


def predict(
    model: ProbeModel,
    instances: Sequence[ProbeInstance],
    bundles: Mapping[str, ReprBundle],
    lins: Mapping[str, LinearizedDocument],
) -> list:
    """Predicted labels; ties go to the lowest label index."""
    out = []
    for instance in instances:
        feats = _endpoint_columns(instance, bundles, lins)
        mix_weights = _softmax(model.mix_logits)
        rep = model.mix_scale * (mix_weights @ feats)
        scores = rep @ model.weight + model.bias
        out.append(model.labels[int(np.argmax(scores))])
    return out


def eval_probe(
    model: ProbeModel,
    dataset: ProbeDataset,
    bundles: Mapping[str, ReprBundle],
    lins: Mapping[str, LinearizedDocument],
    split: str = "test",
) -> float:
    """Accuracy over one split of the dataset."""
    if split not in SPLITS:
        raise ConfigError(f"unknown split {split!r}")
    chosen = [i for i in dataset.instances if i.split == split]
    if not chosen:
        raise ValidationError(f"no instances in split {split!r}")
    predictions = predict(model, chosen, bundles, lins)
    hits = sum(p == i.label for p, i in zip(predictions, chosen))
    return hits / len(chosen)


# -- checkpoint io ----------------------------------------------------------------

_CKPT_MAGIC = "probe-checkpoint 1"


def save_checkpoint(model: ProbeModel, path: str | Path) -> None:
    lines = [_CKPT_MAGIC]
    lines.append("[meta]")
    lines.append(f"task {model.task}")
    lines.append(f"labels {json.dumps(list(model.labels))}")
    lines.append("[mix]")
    lines.append(f"scale {model.mix_scale!r}")
    lines.append("logits " + " ".join(repr(v) for v in model.mix_logits.tolist()))
    lines.append("[linear]")
    lines.append(f"shape {model.weight.shape[0]} {model.weight.shape[1]}")
    for row in model.weight:
        lines.append("w " + " ".join(repr(v) for v in row.tolist()))
    lines.append("b " + " ".join(repr(v) for v in model.bias.tolist()))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_checkpoint(path: str | Path) -> ProbeModel:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != _CKPT_MAGIC:
        raise ValidationError(f"{path}: not a probe checkpoint")
    fields: dict = {"w": []}
    for line in lines[1:]:
        if not line.strip() or line.startswith("["):
            continue
        key, _, rest = line.partition(" ")
        if key == "w":
            fields["w"].append([float(v) for v in rest.split()])
        else:
            fields[key] = rest
    try:
        labels = tuple(json.loads(fields["labels"]))
        rows, cols = (int(v) for v in fields["shape"].split())
        model = ProbeModel(
            task=fields["task"],
            labels=labels,
            mix_logits=np.array([float(v) for v in fields["logits"].split()]),
            mix_scale=float(fields["scale"]),
            weight=np.array(fields["w"], dtype=np.float64).reshape(rows, cols),
            bias=np.array([float(v) for v in fields["b"].split()]),
        )
    except (KeyError, ValueError) as exc:
        raise ValidationError(f"{path}: malformed checkpoint ({exc})") from None
    return model
