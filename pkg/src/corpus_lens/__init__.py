"""Perception analytics for online discussion corpora.

Lexicon sentiment scoring, density-based topic discovery, keyword aspect
matching, rank-based hypothesis tests and random-intercept variance
components, with a pipeline CLI that emits table- and figure-shaped data.
"""

__version__ = "0.1.0"
