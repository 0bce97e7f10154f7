"""Multi-basin flood susceptibility toolkit.

End-to-end pipeline: CSV ingest -> flood / time-to-peak labels -> monthly
feature assembly with a location-based 60-20-20 split -> from-scratch
random forest, gradient-boosted trees and MLP -> precision-recall
evaluation against naive and NOAA-style baselines. A built-in synthetic
rainfall-runoff generator provides ground truth for every stage.
"""

__version__ = "0.1.0"

from . import (  # noqa: F401
    errors,
    evaluation,
    features,
    hydrology,
    ingest,
    models,
    pipeline,
    synth,
    timeutil,
)
