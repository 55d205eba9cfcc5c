"""Build script: compiles the optional synthesis kernel extension.

The package works without the extension (a numpy fallback is selected at
import time), so a failed compile downgrades to a warning instead of
aborting the install.
"""

import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    def run(self):
        try:
            build_ext.run(self)
        except Exception as exc:  # missing compiler, etc.
            print(f"WARNING: extension build failed ({exc}); "
                  "falling back to the pure numpy kernel", file=sys.stderr)

    def build_extension(self, ext):
        try:
            build_ext.build_extension(self, ext)
        except Exception as exc:
            print(f"WARNING: could not build {ext.name} ({exc}); "
                  "falling back to the pure numpy kernel", file=sys.stderr)


ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "zebra_sonify.synthesis._kernel",
                ["src/zebra_sonify/synthesis/_kernel.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError as exc:
    print(f"WARNING: Cython/numpy unavailable at build time ({exc}); "
          "installing without the compiled kernel", file=sys.stderr)

setup(ext_modules=ext_modules, cmdclass={"build_ext": optional_build_ext})
