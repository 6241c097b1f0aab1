"""Build script for the optional compiled convolution backend.

The package is fully functional without the extension (a scipy-backed
fallback is selected at import time), so a failed compile only costs speed.
"""

from setuptools import setup
from setuptools.extension import Extension

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "promptdeg.kernels._native",
                ["src/promptdeg/kernels/_native.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
