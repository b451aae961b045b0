"""Backend selection for the event kernels.

The compiled core is used when it imports; otherwise the pure-Python
reference takes over.  Set ``ZEALOT_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels as python_backend

compiled_backend = None
if not os.environ.get("ZEALOT_PURE_PYTHON"):
    try:
        from . import _ckernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

backend = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "cython" if compiled_backend is not None else "python"

forward_sim = backend.forward_sim
forward_replay = backend.forward_replay
cobra_sim = backend.cobra_sim
brw_sim = backend.brw_sim
pair_coalescence = backend.pair_coalescence
