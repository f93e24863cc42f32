"""Hybrid instance segmentation toolkit for fission gas bubbles:
a multitask region/boundary network for medium and large bubbles, a Canny
edge-based detector for small bubbles, recall-only evaluation for partially
labeled ground truth, and a synthetic micrograph oracle."""

__version__ = "0.1.0"
