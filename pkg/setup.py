"""Build the optional Cython quadrature core.

The package is fully functional without the extension (a numpy fallback is
selected at import time); the extension only accelerates the hot panel-sum
loops.  Build in place with:

    python setup.py build_ext --inplace
"""

import numpy as np
from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Swallow compiler failures: the pure-python backend takes over."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # pragma: no cover
            print(f"WARNING: extension build failed ({exc}); "
                  "sqglab will use the numpy backend")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # pragma: no cover
            print(f"WARNING: building {ext.name} failed ({exc}); "
                  "sqglab will use the numpy backend")


try:
    from Cython.Build import cythonize
    extensions = cythonize(
        [Extension(
            "sqglab._quadcore",
            ["src/sqglab/_quadcore.pyx"],
            include_dirs=[np.get_include()],
            extra_compile_args=["-O3"],
        )],
        compiler_directives={"language_level": "3"},
    )
except ImportError:  # pragma: no cover
    extensions = []

setup(ext_modules=extensions, cmdclass={"build_ext": optional_build_ext})
