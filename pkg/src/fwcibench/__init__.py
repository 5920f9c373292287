"""Citation-impact benchmarking toolkit.

Decomposes grant-funded publication corpora into per-paper FWCI values,
fits lognormal impact models to histograms with bin-ensemble confidence
intervals, and corrects small-sample award averages against simulated
international medians.
"""

__version__ = "0.1.0"

from . import corpus, histogram, leastsq, lognormal, simulate

__all__ = ["corpus", "histogram", "leastsq", "lognormal", "simulate", "__version__"]
