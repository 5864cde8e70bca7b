"""Hybrid curriculum learning for emotion recognition in conversation.

The package provides a corpus data model and loader, a valence-arousal
emotion wheel with label-similarity derived soft targets, conversation-level
difficulty scheduling, a small reference classifier with exact gradients,
a training harness covering the curriculum strategy family, evaluation
metrics, and a synthetic corpus generator.
"""

__version__ = "0.1.0"

from emocl.errors import CorpusFormatError, DataError, EmoclError

__all__ = ["EmoclError", "DataError", "CorpusFormatError", "__version__"]
