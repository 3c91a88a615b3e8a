import numpy as np
import pytest

from patchsim.backbone import BackboneConfig, build_backbone
from patchsim.config import RunConfig, TrainConfig
from patchsim.synthetic import synth_textures
from patchsim.training import train


@pytest.fixture(scope="session")
def micro_cfg() -> RunConfig:
    return RunConfig(
        backbone=BackboneConfig(patch_size=4, embed_dim=96, depth=6, heads=3, image_size=32),
        train=TrainConfig(epochs=2, batch_size=16, head_hidden=128, head_dim=32, seed=0),
    )


@pytest.fixture(scope="session")
def tiny_corpus():
    return synth_textures(32, 4, 32, seed=1)


@pytest.fixture(scope="session")
def tiny_images(tiny_corpus):
    return [img for img, _ in tiny_corpus]


@pytest.fixture(scope="session")
def random_backbone():
    return build_backbone(BackboneConfig(), seed=7)


@pytest.fixture(scope="session")
def mini_checkpoint(tmp_path_factory, micro_cfg, tiny_images):
    """A very short training run; enough for service/CLI plumbing tests."""
    out = tmp_path_factory.mktemp("mini-run")
    result = train(tiny_images, micro_cfg, out, log_every=0)
    return result.checkpoints[-1]


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
