"""Builds the optional compiled kernels; the package runs without them."""
import os
import sys

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension
except ImportError:
    sys.stderr.write("Cython/numpy unavailable; installing pure-Python kernels only\n")
else:
    ext_modules = cythonize(
        [Extension("samez._core", [os.path.join("src", "samez", "_core.pyx")],
                   include_dirs=[np.get_include()],
                   define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                   extra_compile_args=["-O3"])],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
