"""Build the optional Cython kernels.

The package works without them: ``yode.kernels`` falls back to the numpy
implementation when the extension is missing.
"""
import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("YODE_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "yode._ckernels",
                    ["src/yode/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    # no -ffast-math: results must match the fallback bit for bit
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
