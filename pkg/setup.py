"""Build script: compiles the optional sampling kernels.

The package is fully functional without the extension (a vectorized numpy
implementation is selected at import time), so any failure here degrades to
a pure-Python install instead of aborting.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("CCMCKP_SKIP_KERNELS", "0") != "1":
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "ccmckp.backends._kernels",
                    sources=["src/ccmckp/backends/_kernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    # -ffp-contract=off keeps the scalar arithmetic aligned with
                    # numpy's (no FMA contraction), so both backends agree to the ulp
                    # on everything except libm-vs-SIMD transcendentals.
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
