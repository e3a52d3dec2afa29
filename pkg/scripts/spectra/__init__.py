"""
HTEQ spectra - signal types, FFT transforms and the ATF database file format.
"""
