"""
Training loop, augmentation and ablation harness for the MotionConformer.
"""
