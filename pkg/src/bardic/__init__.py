"""Modern-to-Shakespearean English style transfer with a pointer/RNN mixture seq2seq."""

__version__ = "0.1.0"
