"""
Motion sequences, the SMF file format and dataset-to-sample transformations.
"""
