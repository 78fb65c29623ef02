"""Backend selection for the sparse expansion kernel.

The compiled Cython extension is used when it was built; otherwise the numpy
fallback in ``_pykernels`` is loaded. Setting ``POLFOCK_PURE_PYTHON=1`` in the
environment forces the fallback.
"""

import os

import numpy as np

from . import _pykernels

if os.environ.get("POLFOCK_PURE_PYTHON", "") not in ("", "0"):
    _compiled = None
else:
    try:
        from . import _ckernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"


def _expand_compiled(occ, amp, cols, U):
    return _compiled.expand(
        np.ascontiguousarray(occ, dtype=np.uint8),
        np.ascontiguousarray(amp, dtype=np.complex128),
        np.ascontiguousarray(cols, dtype=np.intp),
        np.ascontiguousarray(U, dtype=np.complex128),
    )


_BACKENDS = {"python": _pykernels.expand}
if _compiled is not None:
    _BACKENDS["cython"] = _expand_compiled


def available_backends():
    return tuple(_BACKENDS)


def expand(occ, amp, cols, U, backend=None):
    """Rewrite the creation operators of ``cols`` through ``U`` for every row.

    Returns unmerged ``(rows, amplitudes)``; pass the result through
    :func:`merge_terms` to obtain canonical sparse terms.
    """
    return _BACKENDS[backend or BACKEND](occ, amp, cols, U)


def merge_terms(rows, amps, tol):
    """Sum amplitudes of identical occupation rows and drop |amp| < tol.

    Output rows are sorted lexicographically, which is the canonical term
    order of :class:`polfock.fock.FockState`.
    """
    rows = np.ascontiguousarray(rows, dtype=np.uint8)
    amps = np.asarray(amps, dtype=np.complex128)
    M = rows.shape[1]
    if rows.shape[0] == 0:
        return rows.reshape(0, M), amps.reshape(0)
    if M == 0:
        total = amps.sum()
        if abs(total) < tol:
            return np.zeros((0, 0), dtype=np.uint8), np.zeros(0, dtype=np.complex128)
        return np.zeros((1, 0), dtype=np.uint8), np.array([total])
    keys = rows.view(np.dtype((np.void, M))).ravel()
    uniq, first, inverse = np.unique(keys, return_index=True, return_inverse=True)
    inverse = np.asarray(inverse).ravel()
    n = len(uniq)
    re = np.bincount(inverse, weights=amps.real, minlength=n)
    im = np.bincount(inverse, weights=amps.imag, minlength=n)
    merged = re + 1j * im
    keep = np.abs(merged) >= tol
    return rows[first][keep], merged[keep]
