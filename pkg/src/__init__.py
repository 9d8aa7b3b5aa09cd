"""Cross-version defect prediction with aligned class-dependency-network embeddings."""

__version__ = "0.1.0"
