"""Classifier families, grid search and model persistence."""
