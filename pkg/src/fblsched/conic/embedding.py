"""Real embedding of complex beamvectors.

A complex vector ``w`` of length Nt maps to ``x = [Re w; Im w]`` of length
2Nt. For a channel ``h`` the scalar ``h^H w`` is then linear in ``x``:
``Re(h^H w) = a @ x`` and ``Im(h^H w) = b @ x`` with ``(a, b)`` from
:func:`hermitian_rows`.
"""

from __future__ import annotations

import numpy as np


def embed_complex(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    return np.concatenate([v.real, v.imag], axis=-1)


def unembed(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    n = x.shape[-1] // 2
    return x[..., :n] + 1j * x[..., n:]


def hermitian_rows(h) -> tuple[np.ndarray, np.ndarray]:
    """Row vectors giving the real and imaginary part of ``h^H w``."""
    h = np.asarray(h, dtype=complex)
    a = np.concatenate([h.real, h.imag])
    b = np.concatenate([-h.imag, h.real])
    return a, b


def abs2_inner(h, x) -> float:
    """``|h^H w|^2`` evaluated in embedded coordinates."""
    a, b = hermitian_rows(h)
    x = np.asarray(x, dtype=float)
    return float((a @ x) ** 2 + (b @ x) ** 2)


def real_inner(u, v) -> float:
    """``Re(u^H v)``, which is the plain dot product of the embeddings."""
    return float(embed_complex(u) @ embed_complex(v))
