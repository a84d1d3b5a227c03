"""Canonical U- and V-statistics of phi-mixing sequences: orthogonal-series
evaluation, exponential tail bounds with traced constants, and Monte Carlo
envelope checks."""

__version__ = "0.1.0"
