"""Vibro-acoustic bolt-loosening detection toolkit.

Generates controlled shaker-style excitations, estimates PSDs, extracts
harmonic band power ratios, and classifies joint preload states against a
reference table. A nonlinear single-degree-of-freedom joint simulator is
included so the whole pipeline can be exercised without lab hardware.
"""

__version__ = "0.1.0"

from boltscope.signals import TimeSeries
from boltscope.excitation import ExcitationSpec
from boltscope.spectral import Psd, SpectralPeak
from boltscope.features import BandRule, HarmonicRatio, PreloadState, RatioTable
from boltscope.classify import Classification

__all__ = [
    "TimeSeries",
    "ExcitationSpec",
    "Psd",
    "SpectralPeak",
    "BandRule",
    "HarmonicRatio",
    "PreloadState",
    "RatioTable",
    "Classification",
]
