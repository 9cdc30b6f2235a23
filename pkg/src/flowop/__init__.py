"""flowop: neural-operator surrogates for periodic vortex-street flow fields.

Pipeline: synthetic dataset generation -> unstructured-to-structured
interpolation -> autoencoder reduced-order models -> operator training
(DeepONet / FNO families) -> evaluation (relative L2, banded DTW, pressure
drop, probe histories).
"""

__version__ = "0.1.0"
