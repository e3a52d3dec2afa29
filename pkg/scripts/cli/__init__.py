"""
HTEQ cli - run configuration and the synth / train / design / eval commands.
"""
