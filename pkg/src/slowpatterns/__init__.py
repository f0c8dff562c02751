"""Toolkit for slow localized patterns in singularly perturbed two-component
reaction-diffusion systems: slow manifolds, reduced-flow profiles, Melnikov
coefficient tables, existence/bifurcation diagrams, asymptotic spectral
stability, and a direct finite-difference oracle at small eps."""

__version__ = "0.1.0"

from .errors import SlowPatternsError  # noqa: F401
from .model import ModelInstance, ParameterVector, builtin, builtin_names  # noqa: F401
