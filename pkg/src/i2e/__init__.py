"""Assessment pipeline for preschool classroom sessions."""

__version__ = "0.1.0"
