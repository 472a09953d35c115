"""Grid-to-matrix benchmark toolkit: generation, parsing, metrics, geometry and probe I/O."""

from ._core import (
    DEFAULT_IMAGE_SIZE,
    MAX_TOKEN_CAP,
    DecodeError,
    FormatError,
    G2MError,
    ShapeError,
    build_prompt,
    cell_accuracy,
    cell_interaction,
    decode_g2mf,
    decode_image,
    decode_png,
    encode_g2mf,
    encode_png,
    exact_match,
    format_matrix,
    gradient_check,
    interpolate,
    load_features,
    load_g2mf,
    max_tokens,
    normalize,
    palette,
    parse,
    percent,
    probe_logits,
    random_baseline,
    render,
    sample_matrix,
    save_g2mf,
    score,
    synthetic_features,
    type_distribution,
)

__all__ = [name for name in dir() if not name.startswith("_")]
