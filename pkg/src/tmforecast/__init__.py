"""Traffic-matrix forecasting: a from-scratch peephole LSTM plus linear baselines and an evaluation harness."""

__version__ = "0.1.0"
