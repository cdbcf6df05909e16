"""Build the optional compiled kernels.

The extension is optional: when Cython or a C compiler is unavailable the
package installs without it and ``lwr.kernels`` falls back to NumPy.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("LWR_NO_EXTENSION"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "lwr._ckernels",
                    ["src/lwr/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "initializedcheck": False,
            },
        )
        for ext in ext_modules:
            ext.optional = True
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
