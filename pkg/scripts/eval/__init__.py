"""
HTEQ eval - level errors, equalization conditions, leave-one-out and reports.
"""
