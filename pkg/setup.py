"""Build script for the optional compiled kernel core.

The package works without the extension (a pure-Python twin is selected at
import time); building it just makes the hot kernels fast.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "arnolddiff.kernels._speedups",
                ["src/arnolddiff/kernels/_speedups.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
