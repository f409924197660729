"""Build the optional compiled kernels; the package falls back to pure Python."""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("ASYMPOLARON_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [Extension("asympolaron._kernels", ["src/asympolaron/_kernels.pyx"],
                       extra_compile_args=["-O3"])],
            language_level=3,
        )

setup(ext_modules=ext_modules)
