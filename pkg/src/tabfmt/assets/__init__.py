"""Bundled data files: the default ranker model."""
