"""Compact Vision Transformer encoder with CLS + patch tokens and per-layer access."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .errors import RejectedInput, StateError
from .images import validate_image


@dataclass(frozen=True)
class BackboneConfig:
    patch_size: int = 4
    embed_dim: int = 96
    depth: int = 6
    heads: int = 3
    image_size: int = 32

    def __post_init__(self):
        if self.embed_dim % self.heads != 0:
            raise RejectedInput("embed_dim must be divisible by heads")
        if self.depth < 1 or self.patch_size < 1:
            raise RejectedInput("depth and patch_size must be >= 1")

    @property
    def grid(self) -> tuple[int, int]:
        n = self.image_size // self.patch_size
        return (n, n)


# Named variants: "micro" is the desk-scale default; S/B use the standard widths.
PRESETS = {
    "vit_micro": BackboneConfig(patch_size=4, embed_dim=96, depth=6, heads=3, image_size=32),
    "vit_s16": BackboneConfig(patch_size=16, embed_dim=384, depth=12, heads=6, image_size=224),
    "vit_b16": BackboneConfig(patch_size=16, embed_dim=768, depth=12, heads=12, image_size=224),
}


@dataclass
class FeatureSet:
    """Per-image embedding bundle: one CLS vector plus a grid of patch tokens."""

    cls: np.ndarray          # (C,)
    patches: np.ndarray      # (P, C) in row-major grid order
    grid: tuple[int, int]    # (H_p, W_p), H_p * W_p == P
    layer_index: int

    def __post_init__(self):
        hp, wp = self.grid
        if self.patches.shape[0] != hp * wp:
            raise RejectedInput("patch count does not match grid shape")
        if not (np.isfinite(self.cls).all() and np.isfinite(self.patches).all()):
            raise RejectedInput("features contain non-finite values")

    @property
    def dim(self) -> int:
        return int(self.cls.shape[0])


def patchify(image: np.ndarray, patch_size: int) -> tuple[np.ndarray, tuple[int, int]]:
    """Split a (3, H, W) image into flattened non-overlapping patches.

    Returns (patches, grid) with patches of shape (P, patch_size**2 * 3) in
    row-major grid order; within a patch, pixels are laid out (dy, dx, channel).
    """
    validate_image(image)
    c, h, w = image.shape
    if h % patch_size or w % patch_size:
        raise RejectedInput(
            f"image size {h}x{w} not divisible by patch size {patch_size}"
        )
    hp, wp = h // patch_size, w // patch_size
    x = image.reshape(c, hp, patch_size, wp, patch_size)
    x = x.transpose(1, 3, 2, 4, 0)  # (hp, wp, ps, ps, c)
    return np.ascontiguousarray(x.reshape(hp * wp, patch_size * patch_size * c)), (hp, wp)


def fold_patches(vectors: np.ndarray, grid: tuple[int, int], patch_size: int) -> np.ndarray:
    """Inverse of patchify: assemble (P, ps*ps*3) vectors back into a (3, H, W) image."""
    hp, wp = grid
    x = vectors.reshape(hp, wp, patch_size, patch_size, 3)
    x = x.transpose(4, 0, 2, 1, 3)
    return np.ascontiguousarray(x.reshape(3, hp * patch_size, wp * patch_size))


class SelfAttention(nn.Module):
    def __init__(self, dim: int, heads: int):
        super().__init__()
        self.heads = heads
        self.scale = (dim // heads) ** -0.5
        self.qkv = nn.Linear(dim, dim * 3, bias=True)
        self.proj = nn.Linear(dim, dim)

    def forward(self, x):
        b, n, c = x.shape
        qkv = self.qkv(x).reshape(b, n, 3, self.heads, c // self.heads).permute(2, 0, 3, 1, 4)
        q, k, v = qkv.unbind(0)
        attn = (q @ k.transpose(-2, -1)) * self.scale
        attn = attn.softmax(dim=-1)
        x = (attn @ v).transpose(1, 2).reshape(b, n, c)
        return self.proj(x)


class Block(nn.Module):
    """Pre-norm transformer block with a GELU MLP at ratio 4."""

    def __init__(self, dim: int, heads: int):
        super().__init__()
        self.norm1 = nn.LayerNorm(dim)
        self.attn = SelfAttention(dim, heads)
        self.norm2 = nn.LayerNorm(dim)
        self.mlp = nn.Sequential(
            nn.Linear(dim, dim * 4),
            nn.GELU(),
            nn.Linear(dim * 4, dim),
        )

    def forward(self, x):
        x = x + self.attn(self.norm1(x))
        x = x + self.mlp(self.norm2(x))
        return x


class VisionTransformer(nn.Module):
    """ViT encoder exposing tokens from any block.

    Position embeddings are learned at the configured image size (one per patch
    plus one for CLS) and bicubically interpolated when the input resolution
    differs, so a model trained at 32 or 224 can encode larger evaluation inputs.
    """

    def __init__(self, cfg: BackboneConfig, init: bool = True):
        super().__init__()
        self.cfg = cfg
        hp, wp = cfg.grid
        self.patch_embed = nn.Conv2d(3, cfg.embed_dim, cfg.patch_size, stride=cfg.patch_size)
        self.cls_token = nn.Parameter(torch.zeros(1, 1, cfg.embed_dim))
        self.pos_embed = nn.Parameter(torch.zeros(1, hp * wp + 1, cfg.embed_dim))
        self.blocks = nn.ModuleList(Block(cfg.embed_dim, cfg.heads) for _ in range(cfg.depth))
        self.norm = nn.LayerNorm(cfg.embed_dim)
        self._initialized = False
        if init:
            self.init_weights()

    def init_weights(self) -> None:
        for m in self.modules():
            if isinstance(m, nn.Linear):
                nn.init.trunc_normal_(m.weight, std=0.02)
                if m.bias is not None:
                    nn.init.zeros_(m.bias)
            elif isinstance(m, nn.LayerNorm):
                nn.init.ones_(m.weight)
                nn.init.zeros_(m.bias)
            elif isinstance(m, nn.Conv2d):
                nn.init.trunc_normal_(m.weight, std=0.02)
                nn.init.zeros_(m.bias)
        nn.init.trunc_normal_(self.cls_token, std=0.02)
        nn.init.trunc_normal_(self.pos_embed, std=0.02)
        self._initialized = True

    def mark_initialized(self) -> None:
        self._initialized = True

    def interpolated_pos_embed(self, hp: int, wp: int) -> torch.Tensor:
        nh, nw = self.cfg.grid
        if (hp, wp) == (nh, nw):
            return self.pos_embed
        cls_pos = self.pos_embed[:, :1]
        grid_pos = self.pos_embed[:, 1:].reshape(1, nh, nw, -1).permute(0, 3, 1, 2)
        grid_pos = F.interpolate(grid_pos, size=(hp, wp), mode="bicubic", align_corners=False)
        grid_pos = grid_pos.permute(0, 2, 3, 1).reshape(1, hp * wp, -1)
        return torch.cat([cls_pos, grid_pos], dim=1)

    def forward_tokens(self, x: torch.Tensor, layer: int | None = None) -> torch.Tensor:
        """Tokens (B, P+1, C) after `layer` blocks (default: all), final-norm applied."""
        if not self._initialized:
            raise StateError("encoder parameters are uninitialized")
        b, c, h, w = x.shape
        ps = self.cfg.patch_size
        if h % ps or w % ps:
            raise RejectedInput(f"input {h}x{w} not divisible by patch size {ps}")
        depth = self.cfg.depth
        if layer is None:
            layer = depth
        if not 1 <= layer <= depth:
            raise RejectedInput(f"layer must be in [1, {depth}], got {layer}")
        hp, wp = h // ps, w // ps
        tok = self.patch_embed(x).flatten(2).transpose(1, 2)
        tok = torch.cat([self.cls_token.expand(b, -1, -1), tok], dim=1)
        tok = tok + self.interpolated_pos_embed(hp, wp)
        for blk in self.blocks[:layer]:
            tok = blk(tok)
        return self.norm(tok)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.forward_tokens(x)

    @torch.no_grad()
    def encode(self, image: np.ndarray) -> FeatureSet:
        """Encode one image through all blocks; pure function of (parameters, input)."""
        return self.encode_at_layer(image, self.cfg.depth)

    @torch.no_grad()
    def encode_at_layer(self, image: np.ndarray, layer: int) -> FeatureSet:
        validate_image(image)
        was_training = self.training
        self.eval()
        try:
            x = torch.from_numpy(np.ascontiguousarray(image, dtype=np.float32)).unsqueeze(0)
            tok = self.forward_tokens(x, layer=layer)[0]
        finally:
            if was_training:
                self.train()
        ps = self.cfg.patch_size
        grid = (image.shape[1] // ps, image.shape[2] // ps)
        return FeatureSet(
            cls=tok[0].numpy().copy(),
            patches=tok[1:].numpy().copy(),
            grid=grid,
            layer_index=layer,
        )


def build_backbone(cfg: BackboneConfig, seed: int = 0) -> VisionTransformer:
    """Construct and deterministically initialize a backbone."""
    torch.manual_seed(seed)
    return VisionTransformer(cfg)
