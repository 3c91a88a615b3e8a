"""Teacher/student view generation: photometric jitter, block masking, multi-crop.

Every operation is a pure function of (input, seed); batch helpers derive
per-image child seeds from one root seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter

from .config import AugmentConfig
from .errors import RejectedInput
from .images import resize_bilinear, validate_image


def _luminance(img: np.ndarray) -> np.ndarray:
    return 0.299 * img[0] + 0.587 * img[1] + 0.114 * img[2]


def _seedseq(seed) -> np.random.SeedSequence:
    return seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)


def photometric_augment(
    image: np.ndarray,
    seed,
    jitter: tuple[float, float, float] = (0.4, 0.4, 0.4),
    blur_prob: float = 0.5,
    blur_sigma: tuple[float, float] = (0.1, 2.0),
    solarize_prob: float = 0.2,
) -> np.ndarray:
    """Color jitter (brightness/contrast/saturation), Gaussian blur, solarization.

    With all strengths and probabilities at zero the input is returned unchanged
    (bitwise), which the view pipeline relies on for ablations.
    """
    validate_image(image)
    rng = np.random.default_rng(seed)
    b, c, s = jitter
    fb = 1.0 + rng.uniform(-b, b)
    fc = 1.0 + rng.uniform(-c, c)
    fs = 1.0 + rng.uniform(-s, s)
    do_blur = rng.uniform() < blur_prob
    sigma = rng.uniform(*blur_sigma)
    do_solarize = rng.uniform() < solarize_prob

    out = image.copy()
    if b > 0:
        out = out * np.float32(fb)
    if c > 0:
        m = np.float32(_luminance(out).mean())
        out = (out - m) * np.float32(fc) + m
    if s > 0:
        gray = _luminance(out)[None]
        out = gray + (out - gray) * np.float32(fs)
    if do_blur:
        out = np.stack([gaussian_filter(ch, sigma=sigma, mode="nearest") for ch in out])
    if do_solarize:
        out = np.where(out >= 0.5, 1.0 - out, out)
    if b > 0 or c > 0 or s > 0 or do_blur or do_solarize:
        out = np.clip(out, 0.0, 1.0)
    return out.astype(np.float32)


def block_mask(
    grid: tuple[int, int],
    ratio: float,
    seed,
    aspect_range: tuple[float, float] = (0.3, 3.3),
) -> np.ndarray:
    """Block-wise binary mask over a patch grid.

    Rectangular blocks (min side 1) are accumulated until exactly
    round(ratio * cells) cells are masked; single-cell fills top up the count
    if block placement stalls, so the achieved fraction always stays within
    the +-5 percentage point contract (and is exact at 0 and 1).
    """
    if not 0.0 <= ratio <= 1.0:
        raise RejectedInput(f"mask ratio must be in [0, 1], got {ratio}")
    hp, wp = grid
    cells = hp * wp
    target = int(round(ratio * cells))
    mask = np.zeros((hp, wp), dtype=np.uint8)
    if target == 0:
        return mask
    if target == cells:
        return np.ones((hp, wp), dtype=np.uint8)

    rng = np.random.default_rng(seed)
    log_lo, log_hi = np.log(aspect_range[0]), np.log(aspect_range[1])
    masked = 0
    attempts = 0
    while masked < target and attempts < 10 * cells:
        attempts += 1
        budget = target - masked
        area = int(rng.integers(1, budget + 1))
        aspect = float(np.exp(rng.uniform(log_lo, log_hi)))
        h = int(np.clip(round(np.sqrt(area * aspect)), 1, hp))
        w = int(np.clip(round(np.sqrt(area / aspect)), 1, wp))
        if h * w > budget:
            w = max(1, budget // h)
        if h * w > budget:
            h = max(1, budget // w)
        if h * w > budget:
            continue
        top = int(rng.integers(0, hp - h + 1))
        left = int(rng.integers(0, wp - w + 1))
        mask[top : top + h, left : left + w] = 1
        masked = int(mask.sum())
    while masked < target:
        flat = np.flatnonzero(mask == 0)
        mask.flat[flat[rng.integers(0, flat.size)]] = 1
        masked += 1
    return mask


@dataclass
class MaskSpec:
    """Binary patch mask plus fill policy; pixel_mask is the patch mask upsampled."""

    patch_mask: np.ndarray  # (H_p, W_p) uint8, 1 = masked
    fill: str               # "noise" | "donor"
    patch_size: int
    donor: np.ndarray | None = None
    ratio: float = 0.0

    def __post_init__(self):
        if self.fill not in ("noise", "donor"):
            raise RejectedInput(f"unknown fill mode {self.fill!r}")

    @property
    def pixel_mask(self) -> np.ndarray:
        return np.kron(self.patch_mask, np.ones((self.patch_size, self.patch_size), dtype=np.uint8))


def apply_mask(image: np.ndarray, spec: MaskSpec, seed) -> np.ndarray:
    """Replace masked pixels by uniform noise or donor pixels; unmasked pixels untouched."""
    validate_image(image)
    _, h, w = image.shape
    ps = spec.patch_size
    if spec.patch_mask.shape != (h // ps, w // ps) or h % ps or w % ps:
        raise RejectedInput("mask grid does not match image/patch geometry")
    out = image.copy()
    pm = spec.pixel_mask.astype(bool)
    n = int(pm.sum())
    if n == 0:
        return out
    if spec.fill == "donor":
        if spec.donor is None:
            raise RejectedInput("fill mode 'donor' requires a donor image")
        if spec.donor.shape != image.shape:
            raise RejectedInput("donor image shape must match")
        out[:, pm] = spec.donor[:, pm]
    else:
        rng = np.random.default_rng(seed)
        out[:, pm] = rng.uniform(0.0, 1.0, size=(3, n)).astype(np.float32)
    return out


def random_resized_crop(
    image: np.ndarray,
    out_size: int,
    scale: tuple[float, float],
    rng: np.random.Generator,
    aspect_range: tuple[float, float] = (3 / 4, 4 / 3),
) -> np.ndarray:
    _, h, w = image.shape
    area = h * w
    for _ in range(10):
        a = rng.uniform(*scale) * area
        log_r = rng.uniform(np.log(aspect_range[0]), np.log(aspect_range[1]))
        ch = int(round(np.sqrt(a / np.exp(log_r))))
        cw = int(round(np.sqrt(a * np.exp(log_r))))
        if 0 < ch <= h and 0 < cw <= w:
            top = int(rng.integers(0, h - ch + 1))
            left = int(rng.integers(0, w - cw + 1))
            crop = image[:, top : top + ch, left : left + cw]
            return resize_bilinear(crop, out_size, out_size)
    side = min(h, w)
    top = (h - side) // 2
    left = (w - side) // 2
    return resize_bilinear(image[:, top : top + side, left : left + side], out_size, out_size)


@dataclass
class ViewBundle:
    teacher_views: list[np.ndarray]
    student_views: list[np.ndarray]
    mask_specs: list[MaskSpec]
    local_crops: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        if not (len(self.teacher_views) == len(self.student_views) >= 1):
            raise RejectedInput("need equal, nonzero teacher and student view counts")
        if len(self.mask_specs) != len(self.student_views):
            raise RejectedInput("every student view needs a MaskSpec")


def make_views(
    image: np.ndarray,
    cfg: AugmentConfig,
    seed,
    patch_size: int,
    out_size: int | None = None,
    donor: np.ndarray | None = None,
) -> ViewBundle:
    """Two (or more) global crops; each yields an unmasked teacher view and a
    masked student copy. Local crops are small unmasked teacher-side views.

    When a donor image is supplied, each masked view is donor-filled with
    probability cfg.donor_prob, otherwise noise-filled.
    """
    validate_image(image)
    out_size = out_size or image.shape[1]
    if out_size % patch_size:
        raise RejectedInput("view size must be divisible by patch size")
    root = _seedseq(seed)
    view_seeds = root.spawn(cfg.global_crops + cfg.local_crops + 1)
    grid = (out_size // patch_size, out_size // patch_size)

    teacher_views, student_views, specs = [], [], []
    for v in range(cfg.global_crops):
        crop_s, photo_s, mask_s, fill_s, noise_s, donor_s = view_seeds[v].spawn(6)
        view = random_resized_crop(image, out_size, cfg.crop_scale, np.random.default_rng(crop_s))
        view = photometric_augment(
            view,
            photo_s,
            jitter=cfg.jitter,
            blur_prob=cfg.blur_prob,
            blur_sigma=cfg.blur_sigma,
            solarize_prob=cfg.solarize_prob,
        )
        pm = block_mask(grid, cfg.mask_ratio, mask_s)
        use_donor = donor is not None and np.random.default_rng(fill_s).uniform() < cfg.donor_prob
        donor_view = None
        if use_donor:
            d_crop, d_photo = donor_s.spawn(2)
            donor_view = random_resized_crop(
                donor, out_size, cfg.crop_scale, np.random.default_rng(d_crop)
            )
            donor_view = photometric_augment(
                donor_view,
                d_photo,
                jitter=cfg.jitter,
                blur_prob=cfg.blur_prob,
                blur_sigma=cfg.blur_sigma,
                solarize_prob=cfg.solarize_prob,
            )
        spec = MaskSpec(
            patch_mask=pm,
            fill="donor" if use_donor else "noise",
            patch_size=patch_size,
            donor=donor_view,
            ratio=cfg.mask_ratio,
        )
        teacher_views.append(view)
        student_views.append(apply_mask(view, spec, noise_s))
        specs.append(spec)

    locals_ = []
    for v in range(cfg.local_crops):
        crop_s, photo_s = view_seeds[cfg.global_crops + v].spawn(2)
        lc = random_resized_crop(image, cfg.local_size, (0.2, 0.6), np.random.default_rng(crop_s))
        locals_.append(
            photometric_augment(
                lc,
                photo_s,
                jitter=cfg.jitter,
                blur_prob=cfg.blur_prob,
                blur_sigma=cfg.blur_sigma,
                solarize_prob=cfg.solarize_prob,
            )
        )
    return ViewBundle(teacher_views, student_views, specs, locals_)


def make_batch_views(
    images: list[np.ndarray],
    cfg: AugmentConfig,
    seed,
    patch_size: int,
    out_size: int | None = None,
) -> list[ViewBundle]:
    """Per-image ViewBundles with donors drawn from other images of the same batch."""
    root = _seedseq(seed)
    picker = np.random.default_rng(root.spawn(1)[0])
    bundles = []
    for i, img in enumerate(images):
        donor = None
        if len(images) > 1:
            j = int(picker.integers(0, len(images) - 1))
            donor = images[j if j < i else j + 1]
        bundles.append(
            make_views(img, cfg, seed=root.spawn(1)[0], patch_size=patch_size,
                       out_size=out_size, donor=donor)
        )
    return bundles
