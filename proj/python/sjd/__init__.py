"""Speculative Jacobi decoding over synthetic causal models."""

from ._sjd import (
    ConfigError,
    DecodeConfig,
    DecoderKind,
    InitStrategy,
    ModelKind,
    ModelSpec,
    RunSpec,
    SamplerConfig,
    SJDError,
    SweepAxis,
    acceptance_probability,
    apply_sampler,
    calibrated_law,
    decode,
    exact_law,
    heatmap,
    load_config,
    parse_config,
    sweep,
    verify,
)

__all__ = [
    "ConfigError",
    "DecodeConfig",
    "DecoderKind",
    "InitStrategy",
    "ModelKind",
    "ModelSpec",
    "RunSpec",
    "SamplerConfig",
    "SJDError",
    "SweepAxis",
    "acceptance_probability",
    "apply_sampler",
    "calibrated_law",
    "decode",
    "exact_law",
    "heatmap",
    "load_config",
    "parse_config",
    "sweep",
    "verify",
]
