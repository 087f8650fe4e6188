"""Source-device attribution for printed-document images."""
__version__ = "0.1.0"
