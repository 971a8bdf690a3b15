"""Python bindings for the videogan C++ library.

Frames are float32 numpy arrays shaped (3, H, W) with values in [0, 1]; clips
are arrays shaped (N, 3, H, W).
"""

from ._core import (
    DIRECTIONS,
    GradcheckRow,
    Model,
    absolute_histogram,
    adversarial_d,
    adversarial_g,
    apply_color_transform,
    channel_histogram,
    channel_histogram_counts,
    cli_run,
    color_transfer_error,
    content_preservation,
    cycle_loss,
    hist_loss,
    hist_rcd_preservation,
    identity_loss,
    intra_video_c,
    intra_video_consistency,
    intra_video_g,
    load_manifest,
    relative_color_distribution,
    run_gradcheck,
    soft_channel_histogram,
    structural_similarity,
    total_objective,
)

__all__ = [
    "DIRECTIONS",
    "GradcheckRow",
    "Model",
    "absolute_histogram",
    "adversarial_d",
    "adversarial_g",
    "apply_color_transform",
    "channel_histogram",
    "channel_histogram_counts",
    "cli_run",
    "color_transfer_error",
    "content_preservation",
    "cycle_loss",
    "hist_loss",
    "hist_rcd_preservation",
    "identity_loss",
    "intra_video_c",
    "intra_video_consistency",
    "intra_video_g",
    "load_manifest",
    "relative_color_distribution",
    "run_gradcheck",
    "soft_channel_histogram",
    "structural_similarity",
    "total_objective",
]
