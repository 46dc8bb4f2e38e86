"""voicepd: speech-based Parkinson's disease detection pipeline."""

__version__ = "0.1.0"
