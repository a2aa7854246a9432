import os

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None and os.environ.get("HOMEORL_NO_EXT") != "1":
    ext_modules = cythonize(
        [
            Extension(
                "homeorl.kernels._ckernels",
                ["src/homeorl/kernels/_ckernels.pyx"],
                # no FMA contraction: keeps rounding identical to the numpy fallback
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
