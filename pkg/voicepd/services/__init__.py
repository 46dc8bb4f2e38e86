"""Signal processing, feature and evaluation services."""
