"""Tools for turning long-form narrated recordings into a TTS-ready speech corpus.

The package is organized around a batch pipeline: silence-based candidate
segmentation, sentence-complete validation against an ASR + completeness
classifier, boundary trimming guided by transcription stability, per-segment
text and audio quality scoring, two-stage speaker labeling, and a
reproducible line-delimited manifest.
"""

__version__ = "0.1.0"
