"""Dictionary-augmented BiLSTM-CRF sequence labeling with weak supervision."""

__version__ = "0.1.0"
