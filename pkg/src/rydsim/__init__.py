"""Desk-scale simulator of a driven, disordered Rydberg chain.

Subpackages cover dense Hilbert-space linear algebra (``linalg``), the
chain model and pulse schedules (``model``), schedule evolution
(``dynamics``), entropy measures (``entanglement``), chaos-vs-localisation
diagnostics (``diagnostics``), the global-control randomised-measurement
protocol with its noise channels (``randmeas``), and protocol optimization
plus readout calibration (``optimizer``). The ``rydsim`` console script in
``cli`` orchestrates ensemble runs.
"""

__version__ = "0.1.0"

from . import (diagnostics, dynamics, entanglement, linalg, model, optimizer,
               randmeas)

__all__ = [
    "__version__",
    "diagnostics",
    "dynamics",
    "entanglement",
    "linalg",
    "model",
    "optimizer",
    "randmeas",
]
