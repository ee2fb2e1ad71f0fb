"""Builds the optional compiled kernel extension.

The package works without the extension (a NumPy fallback is selected at
import time), so any build failure here should be treated as "install
without the fast kernels" rather than a hard error.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None:
    extensions = cythonize(
        [
            Extension(
                "crmsim._kernels._native",
                ["src/crmsim/_kernels/_native.pyx"],
                # fp-contract off keeps results bit-identical to the NumPy
                # fallback (no FMA reassociation).
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        language_level=3,
    )
else:
    extensions = []

setup(ext_modules=extensions)
