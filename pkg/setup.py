"""Build script for the optional compiled grid kernel.

The extension is optional: when Cython or a C compiler is unavailable the
package installs without it and falls back to the numpy implementation.
"""
import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("LOGPERIOD_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "logperiod._kernels._grid_cy",
                    ["src/logperiod/_kernels/_grid_cy.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    optional=True,
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
