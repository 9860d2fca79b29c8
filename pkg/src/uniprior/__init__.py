"""Single-uniprior index coding toolkit.

Builds bandwidth-optimal linear index codes that minimize the worst-case
per-receiver decoding error probability, enumerates all optimal-length codes
for small instances, and validates the error analysis by Monte Carlo
simulation over AWGN/Rayleigh/Rician channels with M-PSK modulation.
"""

__version__ = "0.1.0"
