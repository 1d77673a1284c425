"""Machine translation decoding and data-curation toolkit."""

__version__ = "0.1.0"
