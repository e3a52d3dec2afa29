"""
HTEQ eqdesign - hear-through equalization filter design.
"""
