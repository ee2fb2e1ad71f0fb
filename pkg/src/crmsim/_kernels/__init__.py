"""Hot-kernel backend selection.

The compiled extension is preferred when it imported cleanly; the NumPy
fallback is used otherwise.  Set ``CRMSIM_PURE_PYTHON=1`` to force the
fallback (the backend benchmark uses this to compare the two).
"""

import os

from . import _purepy

if os.environ.get("CRMSIM_PURE_PYTHON"):
    _impl = _purepy
else:
    try:
        from . import _native as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _purepy

BACKEND = _impl.BACKEND
cum_tail = _impl.cum_tail
invert_many = _impl.invert_many
tail_mass_at = _impl.tail_mass_at


def get_backend(name):
    """Return a specific backend module ("native" or "purepy")."""
    if name == "purepy":
        return _purepy
    if name == "native":
        from . import _native  # noqa: F811

        return _native
    raise ValueError(f"unknown kernel backend {name!r}")
