"""skycell: desk-scale simulator of a multi-cell network serving aerial users,
plus a small reinforcement-learning stack for joint transmit-power and
beam-codeword control.
"""

__version__ = "0.1.0"
