"""Hot elementwise kernels: optimizer updates and threshold pruning.

The compiled extension is used when it was built; otherwise the numpy
fallback is selected. Set ``PARETOPRUNE_KERNELS`` to ``python`` or
``cython`` to force a backend (forcing ``cython`` raises if it is missing).
"""
import os

from . import _pykernels

_FUNCS = (
    "sgd_update",
    "momentum_update",
    "rmsprop_update",
    "adam_update",
    "mrmsprop_update",
    "madam_update",
    "prune_segment",
)


def available_backends():
    names = ["python"]
    try:
        from . import _ckernels  # noqa: F401
    except ImportError:
        pass
    else:
        names.insert(0, "cython")
    return names


def get_backend(name):
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")


def use_backend(name):
    """Rebind the module-level kernel functions to backend ``name``."""
    global BACKEND
    impl = get_backend(name)
    g = globals()
    for fn in _FUNCS:
        g[fn] = getattr(impl, fn)
    BACKEND = impl.NAME


BACKEND = "python"
_requested = os.environ.get("PARETOPRUNE_KERNELS", "auto").lower()
if _requested == "auto":
    use_backend(available_backends()[0])
else:
    use_backend(_requested)
