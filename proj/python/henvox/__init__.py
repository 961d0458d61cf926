"""Python bindings for the henvox hen-vocalization pipeline."""

from ._core import (
    SAMPLE_RATE,
    HenvoxError,
    cbce,
    default_config,
    evaluate,
    extract_features,
    extract_manifest,
    generate_clip,
    generate_dataset,
    load_wav,
    mel_scale,
    pitch,
    read_feature_cache,
    sample_f1,
    segment_syllables,
    train,
    write_wav,
)

__all__ = [
    "SAMPLE_RATE",
    "HenvoxError",
    "cbce",
    "default_config",
    "evaluate",
    "extract_features",
    "extract_manifest",
    "generate_clip",
    "generate_dataset",
    "load_wav",
    "mel_scale",
    "pitch",
    "read_feature_cache",
    "sample_f1",
    "segment_syllables",
    "train",
    "write_wav",
]
