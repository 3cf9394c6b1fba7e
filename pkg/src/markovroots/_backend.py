"""Pick the accumulation kernel at import time.

The compiled kernel is used when it was built; set ``MARKOVROOTS_PURE=1``
to force the numpy fallback.
"""

import os

from . import _pykernels

BACKENDS = {"python": _pykernels.accumulate}
try:
    from . import _ckernels
except ImportError:
    pass
else:
    BACKENDS["cython"] = _ckernels.accumulate

if os.environ.get("MARKOVROOTS_PURE") or "cython" not in BACKENDS:
    BACKEND = "python"
else:
    BACKEND = "cython"
accumulate = BACKENDS[BACKEND]
