"""
HTEQ drp - receiver-to-eardrum response estimation from the secondary path.
"""
