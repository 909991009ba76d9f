"""Build script for the compiled successive-cancellation kernel.

The extension is optional at runtime: bitpipes.polar falls back to a pure
NumPy decoder when the compiled module is missing (see bitpipes/_backend.py).
Set BITPIPES_SKIP_EXT=1 to install without attempting the build.
"""

import os

from setuptools import setup

ext_modules = []
if not os.environ.get("BITPIPES_SKIP_EXT"):
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/bitpipes/_sckernel.pyx",
        compiler_directives={"language_level": "3"},
    )
    for ext in ext_modules:
        ext.include_dirs.append(np.get_include())
        ext.extra_compile_args = ["-O3"]

setup(ext_modules=ext_modules)
