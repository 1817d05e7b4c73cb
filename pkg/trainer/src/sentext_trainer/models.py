"""Classification head and the four feature-fusion baseline networks."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import torch
from torch import nn

from .data import BLOCK_DIMS
from .encoder import HIDDEN_DIM, EncoderConfig, Pooling, load_encoder, pool
from .errors import DimensionMismatchError

N_CLASSES = 2

# Canonical modality order for every concatenation.
BLOCK_ORDER = ("audio", "facial", "lingual")


class BaselineKind(enum.Enum):
    DNN_BASE = "dnn_base"
    EARLY_FUSION = "early_fusion"
    LATE_FUSION_1 = "late_fusion_1"
    LATE_FUSION_2 = "late_fusion_2"


@dataclass(frozen=True)
class BaselineConfig:
    kind: BaselineKind
    blocks: tuple[str, ...] = BLOCK_ORDER

    def __post_init__(self):
        if not self.blocks:
            raise ValueError("at least one feature block is required")
        unknown = [b for b in self.blocks if b not in BLOCK_DIMS]
        if unknown:
            raise ValueError(f"unknown feature blocks {unknown}")
        ordered = tuple(b for b in BLOCK_ORDER if b in self.blocks)
        if self.blocks != ordered:
            raise ValueError("blocks must follow audio, facial, lingual order")

    @property
    def tag(self) -> str:
        return self.kind.value

    def block_dims(self) -> tuple[int, ...]:
        return tuple(BLOCK_DIMS[b] for b in self.blocks)


def _mlp(dims: list[int]) -> nn.Sequential:
    """Linear+ReLU chain through dims; no activation after the last layer."""
    layers: list[nn.Module] = []
    for i in range(len(dims) - 1):
        layers.append(nn.Linear(dims[i], dims[i + 1]))
        if i < len(dims) - 2:
            layers.append(nn.ReLU())
    return nn.Sequential(*layers)


class Head(nn.Module):
    """One 768-unit hidden layer over the pooled vector, then two logits."""

    def __init__(self, in_dim: int = HIDDEN_DIM):
        super().__init__()
        self.hidden = nn.Linear(in_dim, HIDDEN_DIM)
        self.act = nn.ReLU()
        self.out = nn.Linear(HIDDEN_DIM, N_CLASSES)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.out(self.act(self.hidden(x)))


class DiscriminativeModel(nn.Module):
    """Text encoder plus Head; pooling picked by the config."""

    def __init__(self, cfg: EncoderConfig):
        super().__init__()
        self.cfg = cfg
        self.encoder = load_encoder(cfg.name)
        self.head = Head()

    def pooled(self, ids: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        return pool(self.encoder(ids, mask), mask, self.cfg.pooling)

    def forward(self, ids: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        return self.head(self.pooled(ids, mask))


class ConcatBaseline(nn.Module):
    """Feature blocks concatenated, then one MLP to the logits."""

    def __init__(self, cfg: BaselineConfig, hidden: list[int]):
        super().__init__()
        self.cfg = cfg
        self.net = _mlp([sum(cfg.block_dims())] + hidden + [N_CLASSES])

    def forward(self, blocks: list[torch.Tensor]) -> torch.Tensor:
        return self.net(torch.cat(blocks, dim=1))


class LateFusion1(nn.Module):
    """Per-modality [128,128] towers, concatenated, shared [64,64] + classifier."""

    def __init__(self, cfg: BaselineConfig):
        super().__init__()
        self.cfg = cfg
        self.towers = nn.ModuleList([
            nn.Sequential(nn.Linear(dim, 128), nn.ReLU(),
                          nn.Linear(128, 128), nn.ReLU())
            for dim in cfg.block_dims()
        ])
        self.shared = nn.Sequential(nn.Linear(128 * len(cfg.blocks), 64), nn.ReLU(),
                                    nn.Linear(64, 64), nn.ReLU())
        self.classifier = nn.Linear(64, N_CLASSES)

    def forward(self, blocks: list[torch.Tensor]) -> torch.Tensor:
        encoded = [tower(x) for tower, x in zip(self.towers, blocks)]
        return self.classifier(self.shared(torch.cat(encoded, dim=1)))


class LateFusion2(nn.Module):
    """Per-modality [128,128,64,64] towers, outputs summed, then classifier."""

    def __init__(self, cfg: BaselineConfig):
        super().__init__()
        self.cfg = cfg
        self.towers = nn.ModuleList([
            nn.Sequential(nn.Linear(dim, 128), nn.ReLU(),
                          nn.Linear(128, 128), nn.ReLU(),
                          nn.Linear(128, 64), nn.ReLU(),
                          nn.Linear(64, 64), nn.ReLU())
            for dim in cfg.block_dims()
        ])
        self.classifier = nn.Linear(64, N_CLASSES)

    def forward(self, blocks: list[torch.Tensor]) -> torch.Tensor:
        summed = torch.stack([tower(x) for tower, x in zip(self.towers, blocks)],
                             dim=0).sum(dim=0)
        return self.classifier(summed)


def build_baseline(cfg: BaselineConfig) -> nn.Module:
    if cfg.kind is BaselineKind.DNN_BASE:
        return ConcatBaseline(cfg, [768])
    if cfg.kind is BaselineKind.EARLY_FUSION:
        return ConcatBaseline(cfg, [128, 128, 64, 64])
    if cfg.kind is BaselineKind.LATE_FUSION_1:
        return LateFusion1(cfg)
    return LateFusion2(cfg)


def check_block_shapes(cfg: BaselineConfig, blocks: list[torch.Tensor]) -> None:
    dims = cfg.block_dims()
    if len(blocks) != len(dims):
        raise DimensionMismatchError(
            f"expected {len(dims)} feature blocks, got {len(blocks)}"
        )
    for name, dim, block in zip(cfg.blocks, dims, blocks):
        if block.shape[1] != dim:
            raise DimensionMismatchError(
                f"{name} block is {block.shape[1]}-d, declared {dim}-d"
            )


def param_count(module: nn.Module) -> int:
    return sum(p.numel() for p in module.parameters())
