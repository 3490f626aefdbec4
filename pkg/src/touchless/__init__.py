"""Touch-less hand/foot gesture tracking: contour template matching, TLD, gestures and games."""

from .ctm import (ContourTemplate, MatchResult, bundled_template, cb_template_matching,
                  segment_template, viterbi_match)
from .frameio import EdgeImage, Frame, detect_edges, downscale, load_sequence, to_grayscale
from .gestures import GestureEvent, MotionVector, TrajectorySample, classify, compute_motion
from .pipeline import GesturePipeline, PipelineConfig
from .skin import SkinMask, SkinRange, detect_skin_regions, rgb_to_hsv

__version__ = "0.1.0"

__all__ = [
    "ContourTemplate", "MatchResult", "bundled_template", "cb_template_matching",
    "segment_template", "viterbi_match", "EdgeImage", "Frame", "detect_edges", "downscale",
    "load_sequence", "to_grayscale", "GestureEvent", "MotionVector", "TrajectorySample",
    "classify", "compute_motion", "GesturePipeline", "PipelineConfig", "SkinMask", "SkinRange",
    "detect_skin_regions", "rgb_to_hsv",
]
