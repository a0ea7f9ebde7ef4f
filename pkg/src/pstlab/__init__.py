"""Perfect state transfer in coupled-waveguide arrays.

Modules: :mod:`lattice` (array design), :mod:`dynamics` (Hamiltonians and
propagation), :mod:`photonics` (Jones optics, two-photon pipeline),
:mod:`tomography` (reconstruction and fidelities), :mod:`scenarios` and
:mod:`cli` (named experiments).
"""

__version__ = "0.1.0"
