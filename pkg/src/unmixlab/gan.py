"""Least-squares adversarial training of the patch-transformer generator.

The discriminator is three fully connected layers scoring abundance
vectors. Real abundances target 1, generated ones 0; the generator chases
1 and an L1 pull toward its labels. Updates alternate one-to-one per
batch, discriminator first on detached generator output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor, add, backward, concat, l1_loss, matmul, relu, scale, squared_loss, zero_grads
from .core import (
    AbundanceSet,
    ConfigError,
    DatasetSplit,
    DimensionError,
    HsiCube,
    NumericsError,
    extract_patch,
    iterate_patches,
    mirror_pad,
)
from .optim import Adam
from .transformer import PatchTransformer, TransformerConfig


@dataclass(frozen=True)
class DiscriminatorConfig:
    """Three affine layers: p -> hidden[0] -> hidden[1] -> 1, relu between."""

    p: int
    hidden: tuple[int, int] = (64, 32)

    def __post_init__(self):
        if self.p < 1:
            raise ConfigError(f"p must be >= 1, got {self.p}")
        if len(self.hidden) != 2 or min(self.hidden) < 1:
            raise ConfigError(f"hidden must be two positive widths, got {self.hidden}")

    def to_dict(self) -> dict:
        return {"p": self.p, "hidden": list(self.hidden)}

    @staticmethod
    def from_dict(d: dict) -> "DiscriminatorConfig":
        return DiscriminatorConfig(p=d["p"], hidden=tuple(d["hidden"]))


@dataclass(frozen=True)
class TrainConfig:
    epochs: int
    batch_size: int = 32
    lr: float = 2e-4
    beta1: float = 0.7
    beta2: float = 0.999
    lambda_cor: float = 10.0
    seed: int = 0
    s: int = 5
    labeled_fraction: float = 0.4
    use_discriminator: bool = True

    def __post_init__(self):
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.lambda_cor < 0:
            raise ConfigError(f"lambda_cor must be >= 0, got {self.lambda_cor}")
        if not (0 < self.labeled_fraction < 1):
            raise ConfigError(f"labeled_fraction must be in (0, 1), got {self.labeled_fraction}")

    def to_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "lr": self.lr,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "lambda_cor": self.lambda_cor,
            "seed": self.seed,
            "s": self.s,
            "labeled_fraction": self.labeled_fraction,
            "use_discriminator": self.use_discriminator,
        }

    @staticmethod
    def from_dict(d: dict) -> "TrainConfig":
        return TrainConfig(**d)


class Discriminator:
    """Unbounded scalar score over abundance vectors (rows of the input)."""

    def __init__(self, config: DiscriminatorConfig, seed: int | np.random.SeedSequence = 0):
        self.config = config
        rng = np.random.default_rng(seed)
        h1, h2 = config.hidden
        self.params: dict[str, Tensor] = {
            "w1": Tensor.parameter(rng.normal(0.0, 0.02, size=(config.p, h1)), "w1"),
            "b1": Tensor.parameter(np.zeros((1, h1)), "b1"),
            "w2": Tensor.parameter(rng.normal(0.0, 0.02, size=(h1, h2)), "w2"),
            "b2": Tensor.parameter(np.zeros((1, h2)), "b2"),
            "w3": Tensor.parameter(rng.normal(0.0, 0.02, size=(h2, 1)), "w3"),
            "b3": Tensor.parameter(np.zeros((1, 1)), "b3"),
        }

    def parameters(self) -> list[Tensor]:
        return list(self.params.values())

    def forward(self, x: Tensor) -> Tensor:
        if x.data.ndim != 2 or x.shape[1] != self.config.p:
            raise DimensionError(f"discriminator input must be (batch, {self.config.p}), got {x.shape}")
        p = self.params
        h = relu(add(matmul(x, p["w1"]), p["b1"]))
        h = relu(add(matmul(h, p["w2"]), p["b2"]))
        return add(matmul(h, p["w3"]), p["b3"])

    def score(self, rows: np.ndarray) -> np.ndarray:
        return self.forward(Tensor.constant(np.atleast_2d(rows))).data.ravel().copy()

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self.params.items()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        for name, t in self.params.items():
            arr = np.asarray(state[name], dtype=np.float64)
            if arr.shape != t.data.shape:
                raise DimensionError(f"parameter {name!r} has shape {arr.shape}, expected {t.data.shape}")
            t.data = arr.copy()


def d_loss(real_scores: Tensor, fake_scores: Tensor) -> Tensor:
    """Least-squares discriminator objective: real toward 1, fake toward 0."""
    if real_scores.data.size == 0 or fake_scores.data.size == 0:
        raise ConfigError("discriminator loss needs nonempty real and fake batches")
    real_term = squared_loss(real_scores, Tensor.constant(np.ones_like(real_scores.data)))
    fake_term = squared_loss(fake_scores, Tensor.constant(np.zeros_like(fake_scores.data)))
    return add(scale(real_term, 0.5), scale(fake_term, 0.5))


def g_loss(
    fake_scores: Tensor,
    generated: Tensor,
    labels: np.ndarray,
    lambda_cor: float,
) -> tuple[Tensor, Tensor]:
    """Generator objective and its L1 guidance term.

    Total is ``mean((D(G(x)) - 1)^2) + lambda_cor * mean(||G(x) - a*||_1)``
    with the L1 taken per row then averaged over the batch.
    """
    if lambda_cor < 0:
        raise ConfigError(f"lambda_cor must be >= 0, got {lambda_cor}")
    labels = np.asarray(labels, dtype=np.float64)
    if generated.data.shape != labels.shape:
        raise ConfigError(f"generated batch {generated.data.shape} misaligned with labels {labels.shape}")
    if fake_scores.data.shape[0] != generated.data.shape[0]:
        raise ConfigError(
            f"{fake_scores.data.shape[0]} scores misaligned with {generated.data.shape[0]} generated rows"
        )
    adv = squared_loss(fake_scores, Tensor.constant(np.ones_like(fake_scores.data)))
    guide = l1_loss(generated, Tensor.constant(labels))
    return add(adv, scale(guide, lambda_cor)), guide


@dataclass
class TrainResult:
    generator: PatchTransformer
    discriminator: Discriminator
    history: list[tuple[int, float, float, float]]
    train_config: TrainConfig


def _labeled_tokens(
    cube: HsiCube, labels: AbundanceSet, split: DatasetSplit, s: int
) -> tuple[np.ndarray, np.ndarray]:
    half = (s - 1) // 2
    padded = mirror_pad(cube, half)
    tokens = np.empty((split.labeled.size, s * s, cube.bands))
    targets = labels.pixels()[split.labeled]
    for out_i, flat in enumerate(split.labeled):
        r, c = divmod(int(flat), cube.cols)
        tokens[out_i] = extract_patch(padded, r, c, s, margin=half).tokens()
    return tokens, targets


def train(
    cube: HsiCube,
    labels: AbundanceSet,
    split: DatasetSplit,
    tcfg: TrainConfig,
    gcfg: TransformerConfig,
    dcfg: DiscriminatorConfig,
) -> TrainResult:
    """Alternate discriminator and generator updates over labeled patches.

    Each batch first steps the discriminator on real labels versus detached
    generator output, then steps the generator; with the discriminator
    disabled only the L1 term drives the generator under the same budget.
    Fully deterministic for a fixed config.
    """
    if labels.rows != cube.rows or labels.cols != cube.cols:
        raise DimensionError(f"labels {labels.rows}x{labels.cols} do not match cube {cube.rows}x{cube.cols}")
    if labels.endmembers != gcfg.p or dcfg.p != gcfg.p:
        raise DimensionError("generator, discriminator and labels disagree on endmember count")
    if split.n_pixels != cube.n_pixels:
        raise DimensionError(f"split covers {split.n_pixels} pixels, cube has {cube.n_pixels}")
    if split.labeled.size == 0:
        raise ConfigError("training requires a nonempty labeled set")
    if gcfg.s != tcfg.s or gcfg.bands != cube.bands:
        raise DimensionError("generator config does not match the training patch size or band count")

    root = np.random.SeedSequence(tcfg.seed)
    g_ss, d_ss, shuffle_ss = root.spawn(3)
    generator = PatchTransformer(gcfg, seed=g_ss)
    discriminator = Discriminator(dcfg, seed=d_ss)
    shuffle_rng = np.random.default_rng(shuffle_ss)

    tokens, targets = _labeled_tokens(cube, labels, split, tcfg.s)
    n = tokens.shape[0]
    g_params = generator.parameters()
    d_params = discriminator.parameters()
    g_opt = Adam(g_params, lr=tcfg.lr, beta1=tcfg.beta1, beta2=tcfg.beta2)
    d_opt = Adam(d_params, lr=tcfg.lr, beta1=tcfg.beta1, beta2=tcfg.beta2)

    history: list[tuple[int, float, float, float]] = []
    step = 0
    for _ in range(tcfg.epochs):
        order = shuffle_rng.permutation(n)
        for start in range(0, n, tcfg.batch_size):
            batch = order[start : start + tcfg.batch_size]
            outputs = [generator.forward_tokens(tokens[i]) for i in batch]
            label_rows = targets[batch]

            d_value = 0.0
            if tcfg.use_discriminator:
                fake_rows = np.concatenate([t.data for t in outputs], axis=0)
                zero_grads(d_params)
                loss_d = d_loss(
                    discriminator.forward(Tensor.constant(label_rows)),
                    discriminator.forward(Tensor.constant(fake_rows)),
                )
                backward(loss_d, parameters=d_params)
                d_opt.step()
                d_value = float(loss_d.data)

            zero_grads(g_params)
            zero_grads(d_params)
            generated = concat(outputs, axis=0)
            if tcfg.use_discriminator:
                loss_g, guide = g_loss(
                    discriminator.forward(generated), generated, label_rows, tcfg.lambda_cor
                )
            else:
                guide = l1_loss(generated, Tensor.constant(label_rows))
                loss_g = scale(guide, tcfg.lambda_cor)
            backward(loss_g, parameters=g_params)
            g_opt.step()
            zero_grads(d_params)

            g_value = float(loss_g.data)
            l1_value = float(guide.data)
            if not (np.isfinite(d_value) and np.isfinite(g_value)):
                raise NumericsError(f"non-finite loss at step {step}: d={d_value}, g={g_value}")
            history.append((step, d_value, g_value, l1_value))
            step += 1
    return TrainResult(generator, discriminator, history, tcfg)


def infer_abundance(cube: HsiCube, generator: PatchTransformer, threads: int = 1) -> AbundanceSet:
    """Apply the generator to every pixel's patch; output satisfies ANC/ASC.

    Per-pixel evaluation is independent, so results do not depend on order
    or thread count; parameters are shared read-only.
    """
    cfg = generator.config
    if cfg.bands != cube.bands:
        raise DimensionError(f"checkpoint expects {cfg.bands} bands, cube has {cube.bands}")
    out = np.empty((cube.rows, cube.cols, cfg.p))
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        patches = list(iterate_patches(cube, cfg.s))
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for patch, row in zip(patches, pool.map(generator.predict, patches)):
                out[patch.center] = row
    else:
        for patch in iterate_patches(cube, cfg.s):
            out[patch.center] = generator.predict(patch)
    return AbundanceSet(out)
