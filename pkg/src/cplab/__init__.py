"""cplab: a desk-scale laboratory for epoch-based probe accounting.

The package simulates dynamic data structures on an instrumented w-bit
cell memory, drives them with structured hard distributions (random
weight assignments and scaled Fibonacci lattices), and runs the full
encoder/decoder game that recovers one epoch's updates from resolved
cell subsets, with bit-exact message accounting against the epoch's
entropy.
"""

__version__ = "0.1.0"
