"""Orbit kernel selection.

The compiled extension is used when it imports cleanly; otherwise the
pure-Python mirror is used.  Setting ``WFSET_PURE_PYTHON=1`` forces the
fallback, which is how the tests compare the two back ends.
"""

import os

import numpy as np

from . import _orbit_py

try:
    if os.environ.get("WFSET_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-Python back end requested")
    from . import _orbitcore as _compiled
except ImportError:
    _compiled = None

HAVE_EXTENSION = _compiled is not None
backend = "cython" if HAVE_EXTENSION else "python"


def _py_integrate_params(params, t0, y0, s_eval, rtol=1e-10, atol=1e-12, max_steps=1_000_000):
    out, nsteps, nfev, status, s_fail = _orbit_py.integrate_params(
        list(map(float, params)), float(t0), list(map(float, y0)), list(map(float, s_eval)),
        rtol, atol, max_steps,
    )
    dim = len(y0)
    arr = np.array([row if row is not None else [np.nan] * dim for row in out], dtype=float)
    return arr.reshape(len(out), dim), nsteps, nfev, status, s_fail


def _py_integrate_batch(params, t0, Y0, t_end, rtol=1e-10, atol=1e-12, max_steps=1_000_000):
    Y0 = np.asarray(Y0, dtype=float)
    ends, status, s_fail, total = _orbit_py.integrate_batch(
        list(map(float, params)), float(t0), Y0.tolist(), float(t_end), rtol, atol, max_steps
    )
    return (np.array(ends, dtype=float).reshape(Y0.shape), np.array(status, dtype=np.int64),
            np.array(s_fail, dtype=float), total)


def get_backend(name=None):
    """Return ``(integrate_params, integrate_batch)`` for ``name`` ('cython', 'python' or None)."""
    if name is None:
        name = backend
    if name == "cython":
        if not HAVE_EXTENSION:
            raise ImportError("compiled orbit kernel is not available")
        return _compiled.integrate_params, _compiled.integrate_batch
    if name == "python":
        return _py_integrate_params, _py_integrate_batch
    raise ValueError(f"unknown backend {name!r}")


integrate_params, integrate_batch = get_backend()
