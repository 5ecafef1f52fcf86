"""Optional numba acceleration; falls back to plain Python when unavailable."""
try:
    from numba import njit
    NUMBA_AVAILABLE = True
except Exception:  # pragma: no cover
    def njit(*args, **kwargs):  # type: ignore
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(f):
            return f
        return wrap
    NUMBA_AVAILABLE = False

jit = njit(cache=True, nogil=True)
