"""Fingerprint matching over minutiae-anchored dense descriptors."""

from .binarize import binarize_template
from .core import Flavor, Minutia, PatchFrame, Template, TemplateError, angle_diff
from .relaxation import PRESETS, MatchParams, MatchResult, adaptive_top_n, match_templates
from .serialization import dump_template, load, read_template, save, write_template
from .similarity import similarity_matrix

__all__ = [
    "PRESETS",
    "Flavor",
    "MatchParams",
    "MatchResult",
    "Minutia",
    "PatchFrame",
    "Template",
    "TemplateError",
    "adaptive_top_n",
    "angle_diff",
    "binarize_template",
    "dump_template",
    "load",
    "match_templates",
    "read_template",
    "save",
    "similarity_matrix",
    "write_template",
]
