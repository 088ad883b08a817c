"""Select the kernel implementation at import time.

The compiled extension is preferred; ``CLIQUE_MEMORY_BACKEND=python`` forces
the NumPy fallback (handy for benchmarks and for checking the two agree).
"""

import os

from . import _pykernels as pykernels

try:
    from . import _ckernels as ckernels
except ImportError:
    ckernels = None

if ckernels is not None and os.environ.get("CLIQUE_MEMORY_BACKEND", "").lower() != "python":
    kernels = ckernels
    BACKEND = "cython"
else:
    kernels = pykernels
    BACKEND = "python"
