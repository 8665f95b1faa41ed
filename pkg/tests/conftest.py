import numpy as np
import pytest

from forecasters.motion_conformer import ModelConfig
from motion_data.joint_layout import DEFAULT_LAYOUT
from motion_data.sequence import MotionSequence, WindowSpec
from motion_data.synthetic import synth_corpus
from training.config import GeoAugSpec, SpecAugSpec, TrainConfig

FPS = 25.0


def constant_velocity_sequence(name="cv", frames=75, velocity=(40.0, 0.0, -20.0), persons=1,
                               fps=FPS, seed=0, dtype=np.float64):
    """A random rigid pose translated by ``velocity`` mm per frame."""
    rng = np.random.default_rng(seed)
    pose = rng.integers(-400, 400, size=(persons, DEFAULT_LAYOUT.size, 3)).astype(np.float64)
    steps = np.arange(frames, dtype=np.float64)[:, None, None, None]
    data = pose[None] + steps * np.asarray(velocity, dtype=np.float64)
    return MotionSequence(name=name, data=data.astype(dtype), fps=fps, layout=DEFAULT_LAYOUT)


def static_sequence(name="static", frames=75, seed=0):
    return constant_velocity_sequence(name=name, frames=frames, velocity=(0.0, 0.0, 0.0), seed=seed)


@pytest.fixture
def layout():
    return DEFAULT_LAYOUT


@pytest.fixture
def cv_sequence():
    return constant_velocity_sequence()


@pytest.fixture
def small_spec():
    return WindowSpec(t_in=10, t_out=5, stride=5)


@pytest.fixture
def small_corpus():
    return synth_corpus(seed=3, count=6, fps=FPS, frames=60)


@pytest.fixture
def tiny_model_cfg():
    return ModelConfig(d_model=16, n_blocks=1, n_heads=2, conv_kernel=3, ff_expansion=2, dropout=0.0,
                       t_in=10, t_out=5, joints=DEFAULT_LAYOUT.size)


@pytest.fixture
def tiny_train_cfg():
    return TrainConfig(learning_rate=1e-3, batch_size=8, epochs=2, warmup_steps=2,
                       spec_aug=SpecAugSpec(time_mask_max=3, channel_mask_max=3),
                       geo_aug=GeoAugSpec(), deterministic=True, show_progress=False)
