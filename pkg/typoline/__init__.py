"""
typoline: POS tag projection over a parallel verse corpus and word-order
typology from the projected tags.
"""
__version__ = "0.1.0"
