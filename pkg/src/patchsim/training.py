"""Teacher/student training: projection heads, the combined objective, EMA
updates, schedules wiring, the loop, and the per-layer reconstruction diagnostic.

Gradient flow: student views pass through the student tree; teacher outputs are
computed under no_grad, so no gradient ever reaches teacher parameters.
"""

from __future__ import annotations

import copy
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .augmentation import ViewBundle, make_batch_views
from .backbone import BackboneConfig, VisionTransformer
from .checkpoint import load_checkpoint, save_checkpoint
from .config import RunConfig, config_hash
from .errors import RejectedInput, StateError, TrainingDivergence
from .losses import LossReport
from .schedules import ema_schedule, lr_schedule


class ProjectionHead(nn.Module):
    """3-layer MLP projecting a token to the contrastive space (raw output;
    normalization happens where dot products are taken)."""

    def __init__(self, in_dim: int, hidden: int, out_dim: int):
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(in_dim, hidden),
            nn.GELU(),
            nn.Linear(hidden, hidden),
            nn.GELU(),
            nn.Linear(hidden, out_dim),
        )

    def forward(self, x):
        return self.net(x)


class ReconstructionHead(nn.Module):
    """3-layer MLP decoding each patch token to its pixel block (linear final layer)."""

    def __init__(self, in_dim: int, hidden: int, patch_size: int):
        super().__init__()
        self.patch_size = patch_size
        self.net = nn.Sequential(
            nn.Linear(in_dim, hidden),
            nn.GELU(),
            nn.Linear(hidden, hidden),
            nn.GELU(),
            nn.Linear(hidden, patch_size * patch_size * 3),
        )

    def forward(self, tokens):
        return self.net(tokens)


def fold_tokens(decoded: torch.Tensor, grid: tuple[int, int], patch_size: int) -> torch.Tensor:
    """(B, P, ps*ps*3) patch decodings -> (B, 3, H, W) images; matches patchify layout."""
    b = decoded.shape[0]
    hp, wp = grid
    ps = patch_size
    x = decoded.reshape(b, hp, wp, ps, ps, 3)
    return x.permute(0, 5, 1, 3, 2, 4).reshape(b, 3, hp * ps, wp * ps)


class MMCModel(nn.Module):
    """Backbone plus the three independent heads."""

    def __init__(self, backbone_cfg: BackboneConfig, head_hidden: int, head_dim: int):
        super().__init__()
        self.backbone = VisionTransformer(backbone_cfg)
        c = backbone_cfg.embed_dim
        self.rec_head = ReconstructionHead(c, head_hidden, backbone_cfg.patch_size)
        self.pat_head = ProjectionHead(c, head_hidden, head_dim)
        self.cls_head = ProjectionHead(c, head_hidden, head_dim)

    @property
    def patch_size(self) -> int:
        return self.backbone.cfg.patch_size


def build_model(cfg: RunConfig, seed: int | None = None) -> MMCModel:
    torch.manual_seed(cfg.train.seed if seed is None else seed)
    return MMCModel(cfg.backbone, cfg.train.head_hidden, cfg.train.head_dim)


@dataclass
class TrainState:
    """Student/teacher parameter trees plus step counter and schedule state."""

    student: MMCModel
    teacher: MMCModel
    optimizer: torch.optim.AdamW
    cfg: RunConfig
    step: int = 0
    total_steps: int = 1
    history: list[dict] = field(default_factory=list)

    @property
    def progress(self) -> float:
        return min(1.0, (self.step + 1) / max(1, self.total_steps))

    @property
    def ema_momentum(self) -> float:
        return ema_schedule(self.progress, self.cfg.train.ema_start, self.cfg.train.ema_end)

    @property
    def lr(self) -> float:
        return lr_schedule(
            self.progress, self.cfg.train.lr_peak, self.cfg.train.lr_min, self.cfg.train.warmup_frac
        )

    @property
    def tau(self) -> float:
        return self.cfg.train.temperature


def param_groups(model: MMCModel, weight_decay: float) -> list[dict]:
    """Two groups: weight decay on matrices only; norms, biases, and the
    embedding tables (position, CLS) stay undecayed."""
    decay, no_decay = [], []
    for name, p in model.named_parameters():
        if p.ndim <= 1 or name.endswith("pos_embed") or name.endswith("cls_token"):
            no_decay.append(p)
        else:
            decay.append(p)
    return [
        {"params": decay, "weight_decay": weight_decay},
        {"params": no_decay, "weight_decay": 0.0},
    ]


def init_train_state(cfg: RunConfig, total_steps: int) -> TrainState:
    student = build_model(cfg)
    teacher = copy.deepcopy(student)
    for p in teacher.parameters():
        p.requires_grad_(False)
    optimizer = torch.optim.AdamW(
        param_groups(student, cfg.train.weight_decay), lr=cfg.train.lr_peak
    )
    return TrainState(student, teacher, optimizer, cfg, step=0, total_steps=total_steps)


def ema_update(state: TrainState, momentum: float | None = None) -> TrainState:
    """teacher <- m * teacher + (1 - m) * student, elementwise; student untouched."""
    m = state.ema_momentum if momentum is None else momentum
    with torch.no_grad():
        s_params = dict(state.student.state_dict())
        for name, t in state.teacher.state_dict().items():
            s = s_params.get(name)
            if s is None or s.shape != t.shape:
                raise StateError(f"teacher/student parameter mismatch at {name!r}")
            if t.is_floating_point():
                t.mul_(m).add_(s, alpha=1.0 - m)
    return state


def _stack(views: list[np.ndarray]) -> torch.Tensor:
    return torch.from_numpy(np.stack(views).astype(np.float32))


def _masked_infonce_rows(
    q: torch.Tensor,          # (R, D) queries
    keys: torch.Tensor,       # (K, D) candidate keys
    pos_col: torch.Tensor,    # (R,) index of the positive key per row
    allowed: torch.Tensor,    # (R, K) bool: negatives plus the positive
    tau: float,
) -> torch.Tensor:
    """Row-wise InfoNCE over cosine logits with per-row candidate masking."""
    qn = F.normalize(q, dim=-1)
    kn = F.normalize(keys, dim=-1)
    sims = qn @ kn.T / tau
    neg_inf = torch.finfo(sims.dtype).min
    masked = sims.masked_fill(~allowed, neg_inf)
    lse = torch.logsumexp(masked, dim=1)
    pos = sims.gather(1, pos_col.unsqueeze(1)).squeeze(1)
    return lse - pos


def total_loss(bundles: Sequence[ViewBundle], state: TrainState) -> tuple[torch.Tensor, LossReport]:
    """Combined objective over a batch of view bundles.

    Reconstruction targets are the unmasked teacher views; contrastive negatives
    come only from other images in the batch (all their teacher projections).
    A non-finite component raises TrainingDivergence naming the term.
    """
    flags = state.cfg.losses
    tau = state.tau
    b = len(bundles)
    if b == 0:
        raise RejectedInput("empty batch")
    if b < 2 and (flags.cls or flags.pat):
        warnings.warn("batch of size 1: contrastive terms have no negatives", stacklevel=2)
    n_views = len(bundles[0].teacher_views)
    ps = state.student.patch_size

    teacher_views = [_stack([bun.teacher_views[v] for bun in bundles]) for v in range(n_views)]
    student_views = [_stack([bun.student_views[v] for bun in bundles]) for v in range(n_views)]
    pixel_masks = [
        torch.from_numpy(np.stack([bun.mask_specs[v].pixel_mask for bun in bundles]).astype(np.float32))
        for v in range(n_views)
    ]

    x_student = torch.cat(student_views)            # (V*B, 3, H, W)
    tokens_s = state.student.backbone.forward_tokens(x_student)
    cls_s, pat_s = tokens_s[:, 0], tokens_s[:, 1:]
    h = x_student.shape[-2]
    grid = (h // ps, x_student.shape[-1] // ps)

    with torch.no_grad():
        x_teacher = torch.cat(teacher_views)
        tokens_t = state.teacher.backbone.forward_tokens(x_teacher)
        cls_t, pat_t = tokens_t[:, 0], tokens_t[:, 1:]
        k_cls = state.teacher.cls_head(cls_t) if flags.cls else None
        k_pat = state.teacher.pat_head(pat_t) if flags.pat else None
        local_crops = [lc for bun in bundles for lc in bun.local_crops]
        k_cls_local = None
        if flags.cls and local_crops:
            tokens_l = state.teacher.backbone.forward_tokens(_stack(local_crops))
            k_cls_local = state.teacher.cls_head(tokens_l[:, 0])

    zero = tokens_s.sum() * 0.0
    l_rec = l_cls = l_pat = zero

    if flags.rec:
        decoded = state.student.rec_head(pat_s)
        recon = fold_tokens(decoded, grid, ps)
        target = torch.cat(teacher_views)
        mask = torch.cat(pixel_masks).unsqueeze(1)
        count = mask.sum() * 3
        if count > 0:
            l_rec = ((target - recon).abs() * mask).sum() / count

    row_img = torch.arange(n_views * b) % b          # student rows are view-major

    if flags.cls:
        q_cls = state.student.cls_head(cls_s)        # (V*B, D)
        keys = k_cls if k_cls_local is None else torch.cat([k_cls, k_cls_local])
        col_img = torch.arange(n_views * b) % b
        if k_cls_local is not None:
            n_loc = len(bundles[0].local_crops)
            col_img = torch.cat([col_img, torch.arange(b).repeat_interleave(n_loc)])
        allowed_neg = col_img.unsqueeze(0) != row_img.unsqueeze(1)   # other images only
        # one InfoNCE term per (student view, teacher target of the same image):
        # the same-crop global plus every local crop.
        pos_sets = [torch.arange(n_views * b)]                        # same-crop teacher view
        if k_cls_local is not None:
            for j in range(n_loc):
                pos_sets.append(n_views * b + row_img * n_loc + j)
        terms = []
        for pos_col in pos_sets:
            allowed = allowed_neg.clone()
            allowed[torch.arange(n_views * b), pos_col] = True
            terms.append(_masked_infonce_rows(q_cls, keys, pos_col, allowed, tau))
        l_cls = torch.cat(terms).mean()

    if flags.pat:
        q_pat = state.student.pat_head(pat_s)        # (V*B, P, D)
        p = q_pat.shape[1]
        pool = k_pat.reshape(-1, k_pat.shape[-1])    # (V*B*P, D), view-major
        col_img = (torch.arange(n_views * b * p) // p) % b
        per_view = []
        for v in range(n_views):
            q = q_pat[v * b : (v + 1) * b].reshape(-1, q_pat.shape[-1])  # (B*P, D)
            rows = torch.arange(b * p)
            r_img = rows // p
            allowed = col_img.unsqueeze(0) != r_img.unsqueeze(1)
            pos_col = v * b * p + rows               # same view, image, position
            allowed[rows, pos_col] = True
            per_view.append(_masked_infonce_rows(q, pool, pos_col, allowed, tau))
        l_pat = torch.cat(per_view).mean()

    for term, value in (("rec", l_rec), ("cls", l_cls), ("pat", l_pat)):
        if not torch.isfinite(value):
            raise TrainingDivergence(term, float(value.detach()))
    total = l_rec + l_cls + l_pat
    report = LossReport(
        float(l_rec.detach()), float(l_cls.detach()), float(l_pat.detach())
    )
    return total, report


def train_step(state: TrainState, bundles: Sequence[ViewBundle]) -> LossReport:
    """One optimization step at the scheduled learning rate, then the EMA update."""
    for group in state.optimizer.param_groups:
        group["lr"] = state.lr
    state.optimizer.zero_grad(set_to_none=True)
    total, report = total_loss(bundles, state)
    total.backward()
    if state.cfg.train.grad_clip > 0:
        nn.utils.clip_grad_norm_(state.student.parameters(), state.cfg.train.grad_clip)
    state.optimizer.step()
    ema_update(state)
    state.step += 1
    return report


def _epoch_order(seed: int, epoch: int, n: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(1, epoch)))
    return rng.permutation(n)


def _step_seed(seed: int, step: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=seed, spawn_key=(2, step))


@dataclass
class TrainResult:
    checkpoints: list[Path]
    history: list[dict]
    state: TrainState


def train(
    images: Sequence[np.ndarray],
    cfg: RunConfig,
    out_dir,
    resume=None,
    log_every: int = 0,
) -> TrainResult:
    """Full training loop over an in-memory image list.

    Checkpoints land in out_dir/step-NNNNNN (and out_dir/final); training is
    resumable bit-compatibly because every random draw is derived from
    (cfg.train.seed, step) and the optimizer state rides along in the checkpoint.
    """
    if len(images) == 0:
        raise RejectedInput("dataset is empty")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    batch_size = min(cfg.train.batch_size, len(images))
    steps_per_epoch = max(1, len(images) // batch_size)
    total_steps = steps_per_epoch * cfg.train.epochs

    if resume is not None:
        state = load_train_state(resume)
        if config_hash(state.cfg) != config_hash(cfg):
            raise StateError("resume checkpoint was produced by a different config")
    else:
        state = init_train_state(cfg, total_steps)
    state.total_steps = total_steps

    checkpoints: list[Path] = []
    seed = cfg.train.seed
    out_size = cfg.backbone.image_size
    while state.step < total_steps:
        step = state.step
        epoch = step // steps_per_epoch
        order = _epoch_order(seed, epoch, len(images))
        pos = (step % steps_per_epoch) * batch_size
        batch = [images[i] for i in order[pos : pos + batch_size]]
        bundles = make_batch_views(
            batch, cfg.augment, _step_seed(seed, step), state.student.patch_size, out_size
        )
        report = train_step(state, bundles)
        state.history.append(
            {
                "step": state.step,
                "lr": state.lr,
                "ema_momentum": state.ema_momentum,
                "l_rec": report.l_rec,
                "l_cls": report.l_cls,
                "l_pat": report.l_pat,
                "l_total": report.l_total,
            }
        )
        if log_every and state.step % log_every == 0:
            h = state.history[-1]
            print(
                f"step {h['step']}/{total_steps} total {h['l_total']:.4f} "
                f"(rec {h['l_rec']:.4f} cls {h['l_cls']:.4f} pat {h['l_pat']:.4f})"
            )
        at_epoch_end = state.step % steps_per_epoch == 0
        ce = cfg.train.checkpoint_every
        if ce and at_epoch_end and (state.step // steps_per_epoch) % ce == 0 and state.step < total_steps:
            checkpoints.append(save_train_state(state, out_dir / f"step-{state.step:06d}"))
    checkpoints.append(save_train_state(state, out_dir / "final"))
    return TrainResult(checkpoints, state.history, state)


def _state_dict_arrays(module: nn.Module, prefix: str) -> dict[str, np.ndarray]:
    return {
        f"{prefix}.{name}": tensor.detach().cpu().numpy().astype(np.float32)
        for name, tensor in module.state_dict().items()
    }


def save_train_state(state: TrainState, directory) -> Path:
    arrays = {}
    arrays.update(_state_dict_arrays(state.student, "student"))
    arrays.update(_state_dict_arrays(state.teacher, "teacher"))
    param_names = [n for n, _ in state.student.named_parameters()]
    for (name, param) in state.student.named_parameters():
        opt_state = state.optimizer.state.get(param)
        if opt_state:
            arrays[f"optim.{name}.exp_avg"] = opt_state["exp_avg"].numpy().astype(np.float32)
            arrays[f"optim.{name}.exp_avg_sq"] = opt_state["exp_avg_sq"].numpy().astype(np.float32)
            arrays[f"optim.{name}.step"] = np.asarray(
                [float(opt_state["step"])], dtype=np.float32
            )
    manifest = {
        "step": state.step,
        "total_steps": state.total_steps,
        "ema_momentum": state.ema_momentum,
        "lr": state.lr,
        "temperature": state.tau,
        "config": state.cfg.to_dict(),
        "config_hash": config_hash(state.cfg),
        "param_order": param_names,
    }
    return save_checkpoint(directory, arrays, manifest)


def _load_module(module: nn.Module, arrays: dict[str, np.ndarray], prefix: str) -> None:
    sd = module.state_dict()
    new_sd = {}
    for name, tensor in sd.items():
        key = f"{prefix}.{name}"
        if key not in arrays:
            raise StateError(f"checkpoint missing parameter {key!r}")
        arr = arrays[key]
        if list(arr.shape) != list(tensor.shape):
            raise StateError(f"shape mismatch for {key!r}")
        new_sd[name] = torch.from_numpy(arr.copy()).to(tensor.dtype)
    module.load_state_dict(new_sd)


def load_train_state(directory) -> TrainState:
    manifest, arrays = load_checkpoint(directory)
    cfg = RunConfig.from_dict(manifest["config"])
    state = init_train_state(cfg, manifest.get("total_steps", 1))
    _load_module(state.student, arrays, "student")
    _load_module(state.teacher, arrays, "teacher")
    state.student.backbone.mark_initialized()
    state.teacher.backbone.mark_initialized()
    for name, param in state.student.named_parameters():
        key = f"optim.{name}.exp_avg"
        if key in arrays:
            state.optimizer.state[param] = {
                "step": torch.tensor(float(arrays[f"optim.{name}.step"][0])),
                "exp_avg": torch.from_numpy(arrays[key].copy()),
                "exp_avg_sq": torch.from_numpy(arrays[f"optim.{name}.exp_avg_sq"].copy()),
            }
    state.step = int(manifest["step"])
    return state


def load_model(directory, net: str = "teacher") -> tuple[MMCModel, dict]:
    """Load one network tree (teacher by default) from a checkpoint for evaluation."""
    if net not in ("student", "teacher"):
        raise RejectedInput("net must be 'student' or 'teacher'")
    manifest, arrays = load_checkpoint(directory)
    cfg = RunConfig.from_dict(manifest["config"])
    model = MMCModel(cfg.backbone, cfg.train.head_hidden, cfg.train.head_dim)
    _load_module(model, arrays, net)
    model.backbone.mark_initialized()
    model.eval()
    return model, manifest


def reconstruct_from_layer(
    model: MMCModel, image: np.ndarray, layer: int
) -> tuple[np.ndarray, np.ndarray | None]:
    """Reconstruct an image from a given block's tokens via the decoder head,
    bypassing later blocks; also the absolute difference map against layer-1
    (omitted for layer < 2)."""

    def recon_at(l: int) -> np.ndarray:
        feats = model.backbone.encode_at_layer(image, l)
        with torch.no_grad():
            decoded = model.rec_head(torch.from_numpy(feats.patches).unsqueeze(0))
            img = fold_tokens(decoded, feats.grid, model.patch_size)[0]
        return img.numpy()

    recon = recon_at(layer)
    diff = None
    if layer >= 2:
        diff = np.abs(recon - recon_at(layer - 1))
    return recon, diff


def reconstruct_series(
    model: MMCModel, image: np.ndarray, layers: Sequence[int]
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Reconstructions for each listed layer plus difference maps between
    consecutive entries."""
    recons = [reconstruct_from_layer(model, image, l)[0] for l in layers]
    diffs = [np.abs(b - a) for a, b in zip(recons, recons[1:])]
    return recons, diffs
