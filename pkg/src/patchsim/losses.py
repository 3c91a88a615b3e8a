"""The three training objectives: masked reconstruction, global contrast on the
CLS projection, and per-patch momentum distillation via InfoNCE.

All functions accept torch tensors of any float dtype and are differentiable,
so the gradient checks can run them in float64.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import torch
import torch.nn.functional as F


@dataclass
class LossReport:
    l_rec: float
    l_cls: float
    l_pat: float

    @property
    def l_total(self) -> float:
        return self.l_rec + self.l_cls + self.l_pat


def loss_rec(original: torch.Tensor, reconstruction: torch.Tensor, pixel_mask: torch.Tensor) -> torch.Tensor:
    """Mean absolute error over masked pixels only.

    Normalized by the number of masked elements (mask * channels), so the loss
    scale does not depend on the mask ratio. Zero masked pixels gives 0.
    """
    if original.shape != reconstruction.shape:
        raise ValueError("original and reconstruction shapes must match")
    mask = pixel_mask.to(original.dtype)
    if mask.dim() == original.dim() - 1:
        mask = mask.unsqueeze(-3)  # broadcast over channels
    count = mask.sum() * (original.shape[-3] if mask.shape[-3] == 1 else 1)
    if count.item() == 0:
        return original.sum() * 0.0
    return ((original - reconstruction).abs() * mask).sum() / count


def loss_cls(
    q: torch.Tensor,
    k_plus: torch.Tensor,
    negatives: torch.Tensor | None,
    tau: float,
) -> torch.Tensor:
    """InfoNCE for one query against one positive key and a set of negative keys.

    Vectors are L2-normalized here, so logits are cosine similarities over tau.
    An empty negative set degenerates to a single-entry softmax, i.e. loss 0.
    """
    if tau <= 0:
        raise ValueError("temperature must be positive")
    q = F.normalize(q, dim=-1)
    pos = (q * F.normalize(k_plus, dim=-1)).sum(-1) / tau
    if negatives is None or negatives.numel() == 0:
        return pos * 0.0
    neg = q @ F.normalize(negatives, dim=-1).T / tau
    logits = torch.cat([pos.reshape(1), neg.reshape(-1)])
    return torch.logsumexp(logits, dim=0) - pos


def loss_pat(
    q_m: torch.Tensor,
    k: torch.Tensor,
    negative_pool: torch.Tensor | None,
    tau: float,
) -> torch.Tensor:
    """Per-patch InfoNCE, averaged over positions.

    q_m: (P, D) student patch projections from the masked view.
    k:   (P, D) teacher patch projections from the unmasked view; row p is the
         positive key for query p (positional correspondence).
    negative_pool: (N, D) teacher patch projections from other images.
    """
    if tau <= 0:
        raise ValueError("temperature must be positive")
    if q_m.shape != k.shape:
        raise ValueError("query and key grids must have matching shapes")
    if negative_pool is None or negative_pool.numel() == 0:
        warnings.warn("empty negative pool: patch contrast degenerates to 0", stacklevel=2)
        return q_m.sum() * 0.0
    qn = F.normalize(q_m, dim=-1)
    pos = (qn * F.normalize(k, dim=-1)).sum(-1) / tau                      # (P,)
    neg = qn @ F.normalize(negative_pool, dim=-1).T / tau                  # (P, N)
    logits = torch.cat([pos.unsqueeze(1), neg], dim=1)
    return (torch.logsumexp(logits, dim=1) - pos).mean()
