"""Build script for the optional Cython spline kernel.

The package works without the extension (a numpy fallback is selected at
import time); building it just makes basis evaluation faster.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "kanbench.kernels._bspline_cy",
                ["src/kanbench/kernels/_bspline_cy.pyx"],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
