"""Build script: compiles the optional Cython kernel extension.

The package is fully functional without the extension (a pure-Python/numpy
backend is selected at import time), so any failure here downgrades to a
source-only install instead of breaking it.
"""
from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/prometheus_teleop/_kernels/_core.pyx",
        language_level=3,
    )
    include_dirs = [numpy.get_include()]
    for ext in ext_modules:
        ext.include_dirs = include_dirs
except ImportError:
    pass

setup(ext_modules=ext_modules)
