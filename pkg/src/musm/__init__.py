"""Multi-user spatial modulation over a non-stationary Kronecker massive MIMO channel.

Link-level Monte Carlo simulation (TDMA-SM, BD-SM, BD-V-BLAST, channel
inversion) and MGF-based union bounds on the average bit error rate.
"""

__version__ = "0.1.0"
