# Constraint-aware decoding for temporal action segmentation.
__version__ = '0.1.0'
