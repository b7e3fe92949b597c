"""Hot-loop kernels with a compiled backend and a numpy fallback.

The Cython extension is used when it was built; setting the environment
variable ``RISWSR_PURE_PYTHON=1`` forces the numpy implementation.
"""

import os

import numpy as np

from riswsr._kernels import _numpy

try:
    if os.environ.get("RISWSR_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-python backend requested")
    from riswsr._kernels import _ckernels as _compiled
except ImportError:
    _compiled = None

_backend = _compiled if _compiled is not None else _numpy


def available_backends():
    return ["numpy"] + (["cython"] if _compiled is not None else [])


def get_backend(name=None):
    if name is None:
        return _backend
    if name == "numpy":
        return _numpy
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not built")
        return _compiled
    raise ValueError(f"unknown kernel backend {name!r}")


def backend_name():
    return _backend.NAME


def set_backend(name):
    global _backend
    _backend = get_backend(name)


def _c(x):
    return np.ascontiguousarray(x, dtype=np.complex128)


def _r(x):
    return np.ascontiguousarray(x, dtype=np.float64)


def combined_channel(direct, effective, theta):
    return _backend.combined_channel(_c(direct), _c(effective), _c(theta))


def block_cycle(h, W, W_prev, alpha, beta, weights, noise, p_max, d, L_prev, extrapolate=True):
    return _backend.block_cycle(_c(h), _c(W), _c(W_prev), _r(alpha), _c(beta), _r(weights),
                                float(noise), float(p_max), float(d), float(L_prev), extrapolate)


def phase_residual(effective, h, W, alpha, beta, weights):
    return _backend.phase_residual(_c(effective), _c(h), _c(W), _r(alpha), _c(beta), _r(weights))


def fc_value_grad(theta, a, b, weights, noise):
    return _backend.fc_value_grad(_c(theta), _c(a), _c(b), _r(weights), float(noise))
