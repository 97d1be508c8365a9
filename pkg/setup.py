"""Build script: compiles the optional scoring-kernel extension.

The extension is marked optional; when Cython or a C toolchain is missing
the install still succeeds and the package falls back to the pure-Python
kernels at import time.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "wellspring.kernels._ckernels",
                ["src/wellspring/kernels/_ckernels.pyx"],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
