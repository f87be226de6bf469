"""Builds the optional compiled kernel extension.

The package works without it: tokrail.kernels falls back to the pure
implementation when the extension is missing or TOKRAIL_PURE=1 is set.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "tokrail.kernels._speed",
                ["src/tokrail/kernels/_speed.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level="3",
        compiler_directives={"boundscheck": False, "wraparound": False},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
