"""Build script: compiles the optional C extension for the hot kernels.

The package is fully functional without the extension (a pure numpy
fallback is selected at import time), so a failed compile only costs
speed.  Build in place with::

    python setup.py build_ext --inplace
"""

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    ext_modules = cythonize(
        [
            Extension(
                "multistep._ext",
                ["src/multistep/_ext.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
