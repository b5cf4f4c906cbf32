"""Patch-transformer generator: tokens, multi-head attention, softmax head.

A patch of s x s pixels becomes s^2 tokens (linear band embedding plus a
learned position embedding). Pre-norm residual blocks with multi-head
scaled-dot attention and a relu feed-forward refine the tokens; the center
token feeds a small MLP whose softmax emits the center pixel's abundance,
so nonnegativity and sum-to-one hold by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .autodiff import (
    Tensor,
    add,
    concat,
    layer_norm,
    matmul,
    narrow,
    relu,
    scale,
    softmax,
    transpose,
)
from .core import ConfigError, DimensionError, Patch


@dataclass(frozen=True)
class TransformerConfig:
    """Shape knobs for the generator.

    ``heads`` defaults to the endmember count so each head can settle on
    one endmember subspace; ``d_model`` is always ``heads * d_k``.
    """

    bands: int
    p: int
    s: int = 5
    heads: int = 0  # 0 means "use p"
    d_k: int = 64
    blocks: int = 6
    ffn_hidden: int = 0  # 0 means "4 * d_model"
    freeze_positions: bool = False
    init_std: float = 0.02

    def __post_init__(self):
        if self.p < 2:
            raise ConfigError(f"p must be >= 2, got {self.p}")
        if self.s < 1 or self.s % 2 == 0:
            raise ConfigError(f"patch side must be odd, got {self.s}")
        if self.blocks < 1:
            raise ConfigError(f"blocks must be >= 1, got {self.blocks}")
        if self.bands < 1 or self.d_k < 1:
            raise ConfigError("bands and d_k must be >= 1")
        if self.heads == 0:
            object.__setattr__(self, "heads", self.p)
        if self.ffn_hidden == 0:
            object.__setattr__(self, "ffn_hidden", 4 * self.heads * self.d_k)

    @property
    def d_model(self) -> int:
        return self.heads * self.d_k

    @property
    def n_tokens(self) -> int:
        return self.s * self.s

    @property
    def center_index(self) -> int:
        return (self.s * self.s - 1) // 2

    def to_dict(self) -> dict:
        return {
            "bands": self.bands,
            "p": self.p,
            "s": self.s,
            "heads": self.heads,
            "d_k": self.d_k,
            "blocks": self.blocks,
            "ffn_hidden": self.ffn_hidden,
            "freeze_positions": self.freeze_positions,
            "init_std": self.init_std,
        }

    @staticmethod
    def from_dict(d: dict) -> "TransformerConfig":
        return TransformerConfig(**d)


def embed_tokens(tokens: Tensor, w_embed: Tensor, positions: Tensor) -> Tensor:
    """Linear band embedding plus position embedding, per token row."""
    if tokens.shape[1] != w_embed.shape[0]:
        raise DimensionError(f"{tokens.shape[1]} bands do not match embedding of {w_embed.shape[0]}")
    return add(matmul(tokens, w_embed), positions)


def qkv_project(tokens: Tensor, w_q: Tensor, w_k: Tensor, w_v: Tensor) -> tuple[Tensor, Tensor, Tensor]:
    """Full-width query/key/value projections of the token rows."""
    return matmul(tokens, w_q), matmul(tokens, w_k), matmul(tokens, w_v)


def scaled_dot_attention(q: Tensor, k: Tensor, v: Tensor) -> tuple[Tensor, Tensor]:
    """Attention output and its row-stochastic weight matrix.

    Scores are ``Q K^T / sqrt(d)`` softmaxed per query row, then applied
    to the value rows.
    """
    d = q.shape[-1]
    if d == 0:
        raise ConfigError("attention width d must be >= 1")
    if k.shape[-1] != d:
        raise DimensionError(f"query width {d} does not match key width {k.shape[-1]}")
    if v.shape[0] != k.shape[0]:
        raise DimensionError(f"{v.shape[0]} value rows for {k.shape[0]} key rows")
    weights = softmax(scale(matmul(q, transpose(k)), 1.0 / math.sqrt(d)))
    return matmul(weights, v), weights


def multi_head_attention(
    q: Tensor,
    k: Tensor,
    v: Tensor,
    head_weights: list[tuple[Tensor, Tensor, Tensor]],
    w_out: Tensor,
) -> tuple[Tensor, list[Tensor]]:
    """Per-head subspace attention, concatenated and projected back down."""
    if not head_weights:
        raise ConfigError("need at least one attention head")
    d_v = head_weights[0][2].shape[1]
    if w_out.shape[0] != len(head_weights) * d_v:
        raise DimensionError(
            f"output projection expects width {w_out.shape[0]}, heads concatenate to {len(head_weights) * d_v}"
        )
    outs = []
    weights = []
    for w_qi, w_ki, w_vi in head_weights:
        head_out, head_w = scaled_dot_attention(matmul(q, w_qi), matmul(k, w_ki), matmul(v, w_vi))
        outs.append(head_out)
        weights.append(head_w)
    return matmul(concat(outs, axis=1), w_out), weights


class PatchTransformer:
    """The abundance generator: embedding, residual attention blocks, MLP head."""

    def __init__(self, config: TransformerConfig, seed: int | np.random.SeedSequence = 0):
        self.config = config
        rng = np.random.default_rng(seed)
        std = config.init_std
        d = config.d_model

        def gauss(name: str, *shape: int) -> Tensor:
            return Tensor.parameter(rng.normal(0.0, std, size=shape), name)

        def zeros(name: str, *shape: int) -> Tensor:
            return Tensor.parameter(np.zeros(shape), name)

        self.params: dict[str, Tensor] = {}
        p = self.params
        p["embed.w"] = gauss("embed.w", config.bands, d)
        p["embed.pos"] = gauss("embed.pos", config.n_tokens, d)
        for b in range(config.blocks):
            pre = f"block{b}."
            for tag in ("wq", "wk", "wv"):
                p[pre + tag] = gauss(pre + tag, d, d)
            for h in range(config.heads):
                for tag in ("wq", "wk", "wv"):
                    name = f"{pre}head{h}.{tag}"
                    p[name] = gauss(name, d, config.d_k)
            p[pre + "wo"] = gauss(pre + "wo", config.heads * config.d_k, d)
            p[pre + "ffn.w1"] = gauss(pre + "ffn.w1", d, config.ffn_hidden)
            p[pre + "ffn.b1"] = zeros(pre + "ffn.b1", 1, config.ffn_hidden)
            p[pre + "ffn.w2"] = gauss(pre + "ffn.w2", config.ffn_hidden, d)
            p[pre + "ffn.b2"] = zeros(pre + "ffn.b2", 1, d)
        p["head.w1"] = gauss("head.w1", d, d)
        p["head.b1"] = zeros("head.b1", 1, d)
        p["head.w2"] = gauss("head.w2", d, config.p)
        p["head.b2"] = zeros("head.b2", 1, config.p)

    def parameters(self) -> list[Tensor]:
        """Trainable tensors in a fixed order (frozen positions excluded)."""
        out = []
        for name, t in self.params.items():
            if name == "embed.pos" and self.config.freeze_positions:
                continue
            out.append(t)
        return out

    def _block(self, x: Tensor, b: int, collect: list | None) -> Tensor:
        p = self.params
        pre = f"block{b}."
        normed = layer_norm(x)
        q, k, v = qkv_project(normed, p[pre + "wq"], p[pre + "wk"], p[pre + "wv"])
        head_weights = [
            (p[f"{pre}head{h}.wq"], p[f"{pre}head{h}.wk"], p[f"{pre}head{h}.wv"])
            for h in range(self.config.heads)
        ]
        attended, weights = multi_head_attention(q, k, v, head_weights, p[pre + "wo"])
        if collect is not None and b == self.config.blocks - 1:
            collect.extend(weights)
        y = add(x, attended)
        normed2 = layer_norm(y)
        hidden = relu(add(matmul(normed2, p[pre + "ffn.w1"]), p[pre + "ffn.b1"]))
        return add(y, add(matmul(hidden, p[pre + "ffn.w2"]), p[pre + "ffn.b2"]))

    def forward_tokens(self, tokens: np.ndarray, collect_attention: list | None = None) -> Tensor:
        """Full generator graph from raw (s*s, bands) token rows to (1, p)."""
        cfg = self.config
        if tokens.shape != (cfg.n_tokens, cfg.bands):
            raise DimensionError(
                f"tokens of shape {tokens.shape} do not fit config ({cfg.n_tokens}, {cfg.bands})"
            )
        x = embed_tokens(Tensor.constant(tokens), self.params["embed.w"], self.params["embed.pos"])
        for b in range(cfg.blocks):
            x = self._block(x, b, collect_attention)
        center = narrow(x, cfg.center_index, 1, axis=0)
        hidden = relu(add(matmul(center, self.params["head.w1"]), self.params["head.b1"]))
        logits = add(matmul(hidden, self.params["head.w2"]), self.params["head.b2"])
        return softmax(logits)

    def forward(self, patch: Patch, collect_attention: list | None = None) -> Tensor:
        if patch.size != self.config.s or patch.bands != self.config.bands:
            raise DimensionError(
                f"patch {patch.size}x{patch.size}x{patch.bands} does not fit config "
                f"s={self.config.s}, bands={self.config.bands}"
            )
        return self.forward_tokens(patch.tokens(), collect_attention)

    def predict(self, patch: Patch) -> np.ndarray:
        """Abundance vector (length p) for one patch, no gradient bookkeeping kept."""
        return self.forward(patch).data.ravel().copy()

    def attention_scores_of_center(self, patch: Patch) -> np.ndarray:
        """Final-block attention rows of the center token, one s x s map per head."""
        collected: list = []
        self.forward(patch, collect_attention=collected)
        s = self.config.s
        center = self.config.center_index
        return np.stack([w.data[center].reshape(s, s) for w in collected])

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self.params.items()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        missing = set(self.params) - set(state)
        if missing:
            raise DimensionError(f"checkpoint is missing parameters: {sorted(missing)}")
        for name, t in self.params.items():
            arr = np.asarray(state[name], dtype=np.float64)
            if arr.shape != t.data.shape:
                raise DimensionError(
                    f"parameter {name!r} has shape {arr.shape}, expected {t.data.shape}"
                )
            t.data = arr.copy()
