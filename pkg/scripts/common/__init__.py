"""
HTEQ common - errors, logging setup and artifact I/O shared by every area.
"""
