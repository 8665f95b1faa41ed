"""
Forecasting models: static baselines, ridge regression and the MotionConformer.
"""
