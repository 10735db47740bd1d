"""Probe-free estimation of weak values from post-selection statistics."""

from .errors import EnvelopeWarning, NoFringe, OrthogonalSelection, RegimeError
from .estimator import (
    Estimate,
    InterferometerConfig,
    estimate_expectation_pre_only,
    estimate_im,
    estimate_re,
    estimate_re_symmetric,
    estimate_weak_value,
)
from .transforms import SmallTransform, attenuation_of, dilate_attenuation, unitary_of
from .weakval import Selection, WeakValue, weak_value

__version__ = "0.1.0"
