"""Toolkit for simulating and cross-checking universal quantum computing models.

Submodules: ``core`` (states, channels, distances), ``circuit``, ``tensor``
(MPS/MPU), ``qca`` (local Hamiltonians, Trotter layers), ``codes``,
``mbqc``, ``aqc`` (clock Hamiltonians, adiabatic paths), ``algorithms``
(QSP/QSVT/LCU, program encodings) and ``cli``.
"""

__version__ = "0.1.0"
