"""High-precision evaluation and computer-assisted verification of
inequalities for the generalized logarithmic mean L_r and the Gini-type
mean C_r."""

__version__ = "0.1.0"
