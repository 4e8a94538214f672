"""Build hook for the optional Cython kernels.

The package works without a compiler: ``mdlab.kernels`` falls back to the
NumPy implementations when ``mdlab._kernels`` cannot be imported.
"""
import os
import warnings

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("MDLAB_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        warnings.warn("Cython/NumPy not available at build time; pure-Python kernels only.")
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "mdlab._kernels",
                    ["src/mdlab/_kernels.pyx"],
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

setup(ext_modules=ext_modules)
