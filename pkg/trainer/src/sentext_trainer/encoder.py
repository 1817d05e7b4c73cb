"""Bidirectional text encoder with CLS/mean pooling.

The built-in encoder is a one-block transformer over hashed tokens with
deterministic weights, so the training mechanics (pooling, freezing,
fine-tuning) are testable without downloading a checkpoint.  Other encoder
names can be registered by callers that do ship one.
"""

from __future__ import annotations

import enum
import hashlib
import re
from dataclasses import dataclass

import torch
from torch import nn

from .errors import EncoderLoadError

HIDDEN_DIM = 768
VOCAB_SIZE = 4096
MAX_TOKENS = 32  # including the leading CLS position
PAD_ID = 0
CLS_ID = 1

_TOKEN_RE = re.compile(r"[a-z0-9']+")

BUILTIN_ENCODER = "builtin-tiny"


class Pooling(enum.Enum):
    CLS = "cls"
    MEAN = "mean"


class TrainingMode(enum.Enum):
    FREEZE = "freeze"
    FINETUNE = "finetune"


@dataclass(frozen=True)
class EncoderConfig:
    name: str = BUILTIN_ENCODER
    pooling: Pooling = Pooling.CLS
    training_mode: TrainingMode = TrainingMode.FREEZE

    @property
    def tag(self) -> str:
        return f"{self.name}:{self.pooling.value}:{self.training_mode.value}"


def _bucket(token: str) -> int:
    digest = hashlib.md5(token.encode("utf-8")).digest()
    return 2 + int.from_bytes(digest[:4], "big") % (VOCAB_SIZE - 2)


def tokenize(text: str, max_tokens: int = MAX_TOKENS) -> list[int]:
    """CLS id followed by hashed word ids, truncated to max_tokens."""
    ids = [CLS_ID]
    for token in _TOKEN_RE.findall(text.lower()):
        if len(ids) >= max_tokens:
            break
        ids.append(_bucket(token))
    return ids


def batch_tokens(texts: list[str]) -> tuple[torch.Tensor, torch.Tensor]:
    """(ids, mask) padded to the longest sequence; mask is 1 on real tokens."""
    seqs = [tokenize(t) for t in texts]
    width = max(len(s) for s in seqs)
    ids = torch.full((len(seqs), width), PAD_ID, dtype=torch.long)
    mask = torch.zeros((len(seqs), width), dtype=torch.float32)
    for i, seq in enumerate(seqs):
        ids[i, : len(seq)] = torch.tensor(seq, dtype=torch.long)
        mask[i, : len(seq)] = 1.0
    return ids, mask


class TinyEncoder(nn.Module):
    """One self-attention block, no dropout, deterministic initialization."""

    def __init__(self, seed: int = 0):
        super().__init__()
        self.embed = nn.Embedding(VOCAB_SIZE, HIDDEN_DIM, padding_idx=PAD_ID)
        self.position = nn.Embedding(MAX_TOKENS, HIDDEN_DIM)
        self.block = nn.TransformerEncoderLayer(
            d_model=HIDDEN_DIM, nhead=4, dim_feedforward=HIDDEN_DIM,
            dropout=0.0, batch_first=True,
        )
        self.norm = nn.LayerNorm(HIDDEN_DIM)
        generator = torch.Generator().manual_seed(seed)
        with torch.no_grad():
            for name, parameter in self.named_parameters():
                if parameter.dim() >= 2:
                    parameter.copy_(torch.empty_like(parameter).normal_(
                        mean=0.0, std=0.3, generator=generator))
                elif name.endswith("weight"):  # layer-norm gains
                    parameter.fill_(1.0)
                else:
                    parameter.zero_()
            self.embed.weight[PAD_ID].zero_()

    def forward(self, ids: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        positions = torch.arange(ids.shape[1], device=ids.device)
        x = self.embed(ids) + self.position(positions)[None, :, :]
        x = self.block(x, src_key_padding_mask=(mask == 0.0))
        return self.norm(x)


def pool(hidden: torch.Tensor, mask: torch.Tensor, pooling: Pooling) -> torch.Tensor:
    """Reduce (batch, seq, dim) token states to one vector per text."""
    if pooling is Pooling.CLS:
        return hidden[:, 0, :]
    weights = mask[:, :, None]
    return (hidden * weights).sum(dim=1) / weights.sum(dim=1)


def load_encoder(name: str = BUILTIN_ENCODER) -> nn.Module:
    if name == BUILTIN_ENCODER:
        return TinyEncoder()
    raise EncoderLoadError(f"unknown encoder {name!r}; available: {BUILTIN_ENCODER}")


def encoder_checksum(module: nn.Module) -> str:
    """Digest over all parameter bytes, for freeze-mode audits."""
    digest = hashlib.sha256()
    for name, parameter in sorted(module.named_parameters()):
        digest.update(name.encode())
        digest.update(parameter.detach().cpu().numpy().tobytes())
    return digest.hexdigest()
