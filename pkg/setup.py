"""Build hook for the optional compiled kernels.

Without Cython the package installs with only the numpy fallback.
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
                "paretoprune.kernels._ckernels",
                ["src/paretoprune/kernels/_ckernels.pyx"],
                # no FMA contraction: keeps results bit-identical to numpy
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
