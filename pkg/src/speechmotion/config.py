"""Run configuration: defaults, YAML loading, dotted overrides, hashing."""

import dataclasses
import hashlib
import json
from dataclasses import dataclass, replace
from pathlib import Path

import yaml

from .audio import MFCC_DIM, SPEECH_DIM
from .corpus import CorpusConfig
from .errors import ConfigError
from .face import FaceTrainConfig
from .generate import GenerateConfig
from .prior import ArConfig
from .vq import VqConfig

_FEATURE_DIMS = {"mfcc64": MFCC_DIM, "speech256": SPEECH_DIM}


@dataclass(frozen=True)
class RunConfig:
    corpus: CorpusConfig
    face: FaceTrainConfig
    vq_body: VqConfig
    vq_hand: VqConfig
    prior: ArConfig
    generate: GenerateConfig


_SECTIONS = {
    "corpus": CorpusConfig,
    "face": FaceTrainConfig,
    "vq_body": VqConfig,
    "vq_hand": VqConfig,
    "prior": ArConfig,
    "generate": GenerateConfig,
}


def default_run_config() -> RunConfig:
    corpus = CorpusConfig()
    vq_body = VqConfig(part="body")
    vq_hand = VqConfig(part="hand")
    return RunConfig(
        corpus=corpus,
        face=FaceTrainConfig(),
        vq_body=vq_body,
        vq_hand=vq_hand,
        prior=ArConfig(
            codebook_size=vq_body.codebook_size, n_speakers=corpus.n_speakers
        ),
        generate=GenerateConfig(),
    )


def _coerce(section, name, ftype, value):
    if ftype is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if ftype is bool:
        if isinstance(value, bool):
            return value
        raise ConfigError(f"{section}.{name} must be a bool, got {value!r}")
    if ftype is int and isinstance(value, bool):
        raise ConfigError(f"{section}.{name} must be an int, got {value!r}")
    if isinstance(value, ftype):
        return value
    raise ConfigError(
        f"{section}.{name} must be {ftype.__name__}, got {type(value).__name__} {value!r}"
    )


def _merge_section(section, base, updates):
    fields = {f.name: f.type for f in dataclasses.fields(type(base))}
    if not isinstance(updates, dict):
        raise ConfigError(f"section {section!r} must be a mapping")
    clean = {}
    for name, value in updates.items():
        if name not in fields:
            raise ConfigError(f"unknown key {section}.{name}")
        clean[name] = _coerce(section, name, fields[name], value)
    try:
        return replace(base, **clean)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid values in section {section!r}: {exc}") from exc


def _validate(cfg: RunConfig):
    checks = [
        (cfg.vq_body.part == "body", "vq_body.part must be 'body'"),
        (cfg.vq_hand.part == "hand", "vq_hand.part must be 'hand'"),
        (
            cfg.prior.codebook_size == cfg.vq_body.codebook_size == cfg.vq_hand.codebook_size,
            "prior and both codebooks must agree on codebook_size",
        ),
        (
            cfg.prior.window == cfg.vq_body.window == cfg.vq_hand.window,
            "prior and codebooks must agree on window length",
        ),
        (
            cfg.prior.n_speakers == cfg.corpus.n_speakers,
            "prior.n_speakers must match corpus.n_speakers",
        ),
        (
            cfg.prior.audio_dim == _FEATURE_DIMS[cfg.face.feature_kind],
            "prior.audio_dim must match the face feature dimension",
        ),
        (
            0 <= cfg.generate.speaker < cfg.corpus.n_speakers,
            "generate.speaker outside the corpus speaker range",
        ),
    ]
    for ok, message in checks:
        if not ok:
            raise ConfigError(message)
    return cfg


def load_config(path=None, overrides=()) -> RunConfig:
    """Defaults, optionally updated from a YAML file, then dotted overrides."""
    data = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            data = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"bad YAML in {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config root must be a mapping, got {type(data).__name__}")
    cfg = default_run_config()
    sections = {}
    for section, updates in data.items():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section {section!r}")
        sections[section] = updates
    for section in _SECTIONS:
        if section in sections:
            cfg = replace(
                cfg, **{section: _merge_section(section, getattr(cfg, section), sections[section])}
            )
    cfg = apply_overrides(cfg, overrides)
    return _validate(cfg)


def apply_overrides(cfg: RunConfig, overrides) -> RunConfig:
    """Apply `section.key=value` strings; values parse as YAML literals."""
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        dotted, raw = item.split("=", 1)
        if dotted.count(".") != 1:
            raise ConfigError(f"override key {dotted!r} must be section.key")
        section, key = dotted.split(".")
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section {section!r}")
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse override value {raw!r}: {exc}") from exc
        cfg = replace(
            cfg, **{section: _merge_section(section, getattr(cfg, section), {key: value})}
        )
    return _validate(cfg)


def config_hash(cfg: RunConfig) -> str:
    """Stable 12-hex digest of the full configuration."""
    payload = json.dumps(dataclasses.asdict(cfg), sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:12]
