"""Build hook for the compiled traversal kernel.

The package works without the extension (a pure-Python twin is selected at
import time), so a failed compile degrades to a warning rather than killing
the install.
"""

import sys

from setuptools import setup

try:
    import numpy
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    extensions = cythonize(
        [
            Extension(
                "brwlab._kernel",
                ["src/brwlab/_kernel.pyx"],
                include_dirs=[numpy.get_include()],
                # -ffp-contract=off keeps the compiled kernel bit-identical
                # to the pure-Python one (no FMA contraction of a*b+c).
                extra_compile_args=["-O2", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - build-environment dependent
    print(f"warning: compiled kernel skipped ({exc}); pure-Python fallback "
          "will be used", file=sys.stderr)
    extensions = []

setup(ext_modules=extensions)
