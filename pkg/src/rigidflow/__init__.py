"""Rigid-instance scene flow: per-object SE(3) motion from stereo/flow/segmentation cues."""

__version__ = "0.1.0"
