"""
Command-line interface: simulate, mask, run, impute, predict, evaluate, replicate
"""

__version__ = "0.1.0"
