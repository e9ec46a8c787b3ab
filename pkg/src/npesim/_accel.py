"""Backend selection for the hot kernels.

Numba is used when it is importable and ``NPE_DISABLE_NUMBA`` is unset (or
"0"). Otherwise every kernel runs through its pure-numpy twin. ``NPE_THREADS``
caps the number of numba threads (0 = numba's default).
"""
import os

_disabled = os.environ.get("NPE_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")

# the bundled TBB is too old for numba; workqueue needs nothing external
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

try:
    if _disabled:
        raise ImportError("numba disabled by NPE_DISABLE_NUMBA")
    import numba
    from numba import njit, prange

    HAVE_NUMBA = True
except ImportError:
    numba = None
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def decorator(func):
            return func

        return decorator

    prange = range


def _apply_thread_cap():
    raw = os.environ.get("NPE_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        return
    if HAVE_NUMBA and n > 0:
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


_apply_thread_cap()

_use_numba = HAVE_NUMBA


def use_numba():
    """Whether the dispatchers currently route to the jitted kernels."""
    return _use_numba


def set_backend(name):
    """Switch the kernel backend at runtime: "numba" or "numpy".

    Returns the previous backend name so callers can restore it.
    """
    global _use_numba
    previous = "numba" if _use_numba else "numpy"
    if name == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba backend requested but numba is unavailable")
        _use_numba = True
    elif name == "numpy":
        _use_numba = False
    else:
        raise ValueError(f"unknown backend {name!r}")
    return previous
