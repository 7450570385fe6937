"""Speech-driven holistic 3D motion: face regression plus quantized body/hand synthesis."""

from .audio import AudioFeatureSeq, Waveform, align_to_frames, load_waveform, mfcc
from .config import RunConfig, apply_overrides, config_hash, default_run_config, load_config
from .corpus import Corpus, CorpusConfig, load_corpus, synth_corpus, write_corpus
from .errors import (
    BackendUnavailableError,
    ConfigError,
    FormatError,
    MissingPrerequisiteError,
    ValidationError,
)
from .face import FaceGenerator, FaceTrainConfig, face_forward, face_train, landmark_proxy
from .generate import GenerateConfig, GeneratorBundle, generate_motion
from .metrics import (
    MetricReport,
    cross_seed_variation,
    l2_landmark,
    lvd,
    realism_score,
    train_discriminator,
    variation,
)
from .motion import DatasetSplit, MotionSequence, Sample, SpeakerId, segment, split_dataset
from .motionfile import read_blocks, read_motion, write_blocks, write_motion
from .prior import ArConfig, ArModel, ar_sample, ar_train, joint_log_prob, perplexity
from .vq import VqConfig, VqModel, nearest_code, reconstruction_error, train_vqvae, vq_loss

__version__ = "0.1.0"

__all__ = [
    "AudioFeatureSeq",
    "Waveform",
    "align_to_frames",
    "load_waveform",
    "mfcc",
    "RunConfig",
    "apply_overrides",
    "config_hash",
    "default_run_config",
    "load_config",
    "Corpus",
    "CorpusConfig",
    "load_corpus",
    "synth_corpus",
    "write_corpus",
    "BackendUnavailableError",
    "ConfigError",
    "FormatError",
    "MissingPrerequisiteError",
    "ValidationError",
    "FaceGenerator",
    "FaceTrainConfig",
    "face_forward",
    "face_train",
    "landmark_proxy",
    "GenerateConfig",
    "GeneratorBundle",
    "generate_motion",
    "MetricReport",
    "cross_seed_variation",
    "l2_landmark",
    "lvd",
    "realism_score",
    "train_discriminator",
    "variation",
    "DatasetSplit",
    "MotionSequence",
    "Sample",
    "SpeakerId",
    "segment",
    "split_dataset",
    "read_blocks",
    "read_motion",
    "write_blocks",
    "write_motion",
    "ArConfig",
    "ArModel",
    "ar_sample",
    "ar_train",
    "joint_log_prob",
    "perplexity",
    "VqConfig",
    "VqModel",
    "nearest_code",
    "reconstruction_error",
    "train_vqvae",
    "vq_loss",
    "__version__",
]
