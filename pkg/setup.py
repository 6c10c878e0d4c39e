"""Build script: compiles the optional discrepancy kernel extension.

The package works without the extension (a pure-NumPy backend is selected
at import time), so a failed compile only costs speed, not functionality.
"""

import sys

from setuptools import setup


def _extensions():
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError as exc:
        print(f"warning: building without compiled kernels ({exc})", file=sys.stderr)
        return []
    ext = Extension(
        "mpmc.discrepancy._kernels",
        ["src/mpmc/discrepancy/_kernels.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=_extensions())
