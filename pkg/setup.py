"""Build shim for the optional compiled kernels.

The package is fully functional without the extension (a pure-Python
backend is selected at import time), so a failed compile only costs speed.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover - build environment without Cython
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "pmchat.kernels._speedups",
                ["src/pmchat/kernels/_speedups.pyx"],
                include_dirs=[numpy.get_include()],
                language="c++",
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
