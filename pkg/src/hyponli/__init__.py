"""hyponli: hypothesis-only diagnostics for NLI datasets.

Quantifies how much of an NLI dataset is solvable from hypotheses alone:
hypothesis-only classifiers, majority baselines and their gaps, and the
label-conditional word statistics (give-away words, coverage curves) that
explain those gaps.
"""

__version__ = "0.1.0"
