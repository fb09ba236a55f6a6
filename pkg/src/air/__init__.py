"""AIR: pipeline for synthesizing, filtering, and training on generated image datasets."""

__version__ = "0.1.0"
