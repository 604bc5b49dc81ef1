"""Pure-numpy implementations of the hot elementwise kernels.

Fallback used when the compiled extension is unavailable (or forced via
``NLSLAB_PURE_PYTHON=1``). Semantics must match ``_kernels_cy`` exactly.
"""

import numpy as np

BACKEND = "python"


def abs2(u: np.ndarray) -> np.ndarray:
    """|u|^2 as a float64 array."""
    return (u.real * u.real + u.imag * u.imag).astype(np.float64, copy=False)


def phase_rotate(u: np.ndarray, pot: np.ndarray, a: float, p: float) -> np.ndarray:
    """u * exp(-i*(a*|u|^p + pot)), elementwise.

    ``pot`` is the precomputed real phase contribution (e.g. dt*lambda2*V);
    ``a`` scales the local power term (e.g. dt*lambda1).
    """
    if a == 0.0:
        phase = pot
    elif p == 2.0:
        phase = a * (u.real * u.real + u.imag * u.imag) + pot
    else:
        phase = a * np.abs(u) ** p + pot
    return u * np.exp(-1j * phase)
