"""Ground states, sharp constants and dynamics for the 2D fractional BO-ZK equation.

    u_t + u^p u_x - H u_xx + u_xyy = 0,   (x, y) in a periodic box.

Modules: ``spectral`` (grids, transforms, operators), ``functionals``,
``ground_state`` (Petviashvili solver), ``sharp_constant``, ``evolution``
and ``cli``.
"""
__version__ = "0.1.0"
