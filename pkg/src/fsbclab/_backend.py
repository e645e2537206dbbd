"""Backend selection: compiled core when importable, numpy fallback otherwise.

Set FSBCLAB_PURE=1 to force the fallback (used by the benchmark and the
backend parity tests).  Both backends implement the same contract:
project_simplex, objective_terms, objective, gradient, ascend.
"""

import os

if os.environ.get("FSBCLAB_PURE"):
    from . import _purepy as core
else:
    try:
        from . import _core as core  # type: ignore[attr-defined]
    except ImportError:
        from . import _purepy as core

COMPILED = bool(getattr(core, "COMPILED", False))


def backend_name() -> str:
    """Name of the backend running the hot loops in this process."""
    return "compiled" if COMPILED else "purepy"


def get_backends():
    """All importable backends as (name, module) pairs; compiled first."""
    out = []
    try:
        from . import _core

        out.append(("compiled", _core))
    except ImportError:
        pass
    from . import _purepy

    out.append(("purepy", _purepy))
    return out
