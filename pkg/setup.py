"""Build script for the optional compiled kernels.

The package is fully functional without the extension: hindsight._kernels
falls back to numpy implementations selected at import time. When Cython
and a C compiler are present the hot kernels (token-hash embedding, score
scan) are compiled; build failures are tolerated (``optional=True``).
"""

from setuptools import Extension, setup

extensions = []
try:
    import numpy
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "hindsight._kernels._core",
                ["src/hindsight/_kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    # No Cython in the build environment: pure fallback only.
    pass

setup(ext_modules=extensions)
