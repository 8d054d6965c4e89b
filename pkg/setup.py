"""Build script for the optional compiled Monte Carlo kernel.

The package works without the extension (a vectorized numpy fallback is
selected at import time); building it just makes the trial loop fast.
Run ``python setup.py build_ext --inplace`` for an in-tree build, or let
``pip install -e . --no-build-isolation`` do it.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from setuptools import Extension
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "ionlockin._kernels_cy",
                ["src/ionlockin/_kernels_cy.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    # No Cython available: install pure-Python; the numpy backend is used.
    ext_modules = []

setup(ext_modules=ext_modules)
