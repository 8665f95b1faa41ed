"""
Realistic-noise robustness experiments.
"""
