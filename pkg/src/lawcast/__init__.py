"""lawcast: forecasting and understanding bill enactment.

Subsystems: corpus handling, class-conditional word embeddings scored by
Bayes inversion, tree/linear base learners stacked into an ensemble,
walk-forward evaluation, PRCC sensitivity analysis, and similarity-based
model inspection.
"""

__version__ = "0.1.0"
