"""
HTEQ synthdata - synthetic ATF databases from a lossy-tube ear model.
"""
