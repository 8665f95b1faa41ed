"""
Resolution of a command's parameters from the run configuration.

RunConfig wraps the ConfigManager of one invocation and turns its sections
into the typed objects the library functions take.
"""

import logging
import os
from typing import List, Optional, Tuple

from forecasters.base_forecaster import BaseForecaster
from forecasters.checkpoint import load_checkpoint
from forecasters.motion_conformer import ModelConfig
from forecasters.static_baselines import LastDeltaForecaster, RepeatLastFrameForecaster
from metrics.horizons import HorizonSet
from motion_data.sequence import ForecastWindow, MotionSequence, WindowSpec
from motion_data.smf_format import load_sequences
from motion_data.splits import split_corpus
from motion_data.synthetic import MotionParams
from motion_data.windows import make_windows
from noise_lab.corruption import NoiseSpec, StructuredNoiseSpec
from training.config import TrainConfig
from utils.config_manager import ConfigManager
from utils.error_handler import ConfigurationError, DataError

logger = logging.getLogger(__name__)

STATIC_MODELS = {
    RepeatLastFrameForecaster.name: RepeatLastFrameForecaster,
    LastDeltaForecaster.name: LastDeltaForecaster,
}
SPLIT_NAMES = ("train", "val", "test")
NOISE_KINDS = ("none", "gaussian", "structured", "import")


class RunConfig:
    """Typed view of the resolved configuration of one command."""

    def __init__(self, config_manager: ConfigManager, command: str):
        self.cm = config_manager
        self.command = command
        self._run_dir: Optional[str] = None

    @property
    def seed(self) -> int:
        return int(self.cm.get_setting('seed', 0))

    @property
    def deterministic(self) -> bool:
        return bool(self.cm.get_setting('deterministic', False))

    @property
    def quiet(self) -> bool:
        return bool(self.cm.get_setting('quiet', False))

    @property
    def model_name(self) -> str:
        return self.cm.require_setting('model')

    @property
    def run_dir(self) -> str:
        """``<output_dir>/<command>``, created on first use with the resolved config inside."""
        if self._run_dir is None:
            self._run_dir = self.cm.get_output_directory(self.command)
            self.cm.save_config(os.path.join(self._run_dir, "run_config.json"))
        return self._run_dir

    def output_path(self, name: str) -> str:
        return os.path.join(self.run_dir, name)

    @property
    def corpus_dir(self) -> str:
        return self.cm.get_setting('corpus_dir') or os.path.join(self.cm.require_setting('output_dir'), "corpus")

    # data

    def window_spec(self) -> WindowSpec:
        window = self.cm.require_setting('window')
        try:
            return WindowSpec(t_in=int(window['t_in']), t_out=int(window['t_out']), stride=int(window['stride']))
        except (KeyError, TypeError) as e:
            raise ConfigurationError(f"Invalid window section: {e}")

    @property
    def merge_persons(self) -> bool:
        return bool(self.cm.get_setting('window.merge_persons', False))

    def horizons(self, fps: float) -> HorizonSet:
        return HorizonSet.of(self.cm.require_setting('horizons.horizons_ms'), fps)

    def motion_params(self) -> MotionParams:
        return MotionParams.from_dict(self.cm.get_setting('synth.motion', {}))

    def split_ratios(self) -> Tuple[float, float, float]:
        split = self.cm.require_setting('split')
        return tuple(float(split[name]) for name in SPLIT_NAMES)

    def load_corpus(self, path: Optional[str] = None) -> List[MotionSequence]:
        path = path or self.corpus_dir
        seqs = load_sequences(path)
        if not seqs:
            raise DataError("Corpus directory holds no sequences", path=path)
        return seqs

    def split(self, seqs: List[MotionSequence]) -> Tuple[List[MotionSequence], List[MotionSequence],
                                                          List[MotionSequence]]:
        return split_corpus(seqs, self.seed, self.split_ratios())

    def split_named(self, seqs: List[MotionSequence], name: str) -> List[MotionSequence]:
        if name not in SPLIT_NAMES:
            raise ConfigurationError(f"Unknown split '{name}', expected one of {SPLIT_NAMES}")
        part = self.split(seqs)[SPLIT_NAMES.index(name)]
        if not part:
            raise DataError(f"The {name} split is empty; adjust split ratios or corpus size")
        return part

    def windows(self, seqs: List[MotionSequence], spec: Optional[WindowSpec] = None) -> List[ForecastWindow]:
        spec = spec or self.window_spec()
        windows = []
        for seq in seqs:
            windows.extend(make_windows(seq, spec, self.merge_persons))
        if not windows:
            raise DataError(f"No sequence is long enough for {spec.length}-frame windows")
        return windows

    # models and training

    def model_config(self, joints: int) -> ModelConfig:
        spec = self.window_spec()
        data = dict(self.cm.get_setting('model_config', {}))
        data.update(t_in=spec.t_in, t_out=spec.t_out, joints=joints)
        return ModelConfig.from_dict(data)

    def train_config(self) -> TrainConfig:
        return TrainConfig.from_dict(self.cm.require_setting('train'), seed=self.seed,
                                     deterministic=self.deterministic, show_progress=not self.quiet)

    def noise_source(self):
        """NoiseSpec, StructuredNoiseSpec, imported estimator sequences, or None."""
        noise = self.cm.require_setting('noise')
        kind = noise.get('kind', 'gaussian')
        # an explicit noise.seed pins the noise; otherwise it follows the run seed
        seed = self.seed if noise.get('seed') is None else int(noise['seed'])
        if kind == "none":
            return None
        if kind == "gaussian":
            return NoiseSpec(std=float(noise['std']), clip=float(noise['clip']), seed=seed)
        if kind == "structured":
            try:
                return StructuredNoiseSpec(seed=seed, **noise.get('structured', {}))
            except TypeError as e:
                raise ConfigurationError(f"Invalid noise.structured section: {e}")
        if kind == "import":
            return self.load_corpus(self.cm.require_setting('noise.import_dir'))
        raise ConfigurationError(f"Unknown noise kind '{kind}', expected one of {NOISE_KINDS}")

    def load_forecaster(self, t_out: int, joints: int) -> BaseForecaster:
        """Construct a static baseline or load the configured checkpoint."""
        name = self.model_name
        if name in STATIC_MODELS:
            return STATIC_MODELS[name](t_out)

        path = self.cm.get_setting('checkpoint')
        if not path:
            raise ConfigurationError(f"Model '{name}' needs a checkpoint (set 'checkpoint' or --checkpoint)")
        if not os.path.isfile(path):
            raise ConfigurationError("Checkpoint file does not exist", path=path)
        checkpoint = load_checkpoint(path, joints=joints)
        if checkpoint.kind != name:
            raise ConfigurationError(f"Checkpoint holds a '{checkpoint.kind}' model, configuration selects '{name}'",
                                     path=path)
        if checkpoint.forecaster.t_out != t_out:
            raise ConfigurationError(
                f"Checkpoint predicts {checkpoint.forecaster.t_out} frames, windows have {t_out}", path=path)
        return checkpoint.forecaster
