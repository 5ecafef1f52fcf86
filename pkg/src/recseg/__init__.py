"""Recurring-segment stochastic block models for temporal networks."""
from .core import (IngestError, LambdaTensor, LevelMapping, Model, Partition, Segmentation, TemporalGraph,
                   TimeInterval, baseline_loglik, count_edges, ingest, model_loglik, normalized_loglik,
                   pair_count, poisson_loglik, read_edges, write_edges)
from .estimation import FitConfig, fit, fit_restarts, update_lambda
from .evaluation import generate, intensity_trace, rand_index
from .grouping import find_groups
from .modelfile import ModelFile
from .segmentation import SegmentationError, find_segments
from .smawk import column_argmax

__version__ = "0.1.0"
