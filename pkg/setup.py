"""Build script: compiles the optional hot-loop extension.

The package works without the extension (a numpy fallback is selected at
import time), so a failed compile downgrades to a pure build instead of
aborting the install.
"""

import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext


def _extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        return []
    return cythonize(
        "src/sparsekit/_kernels/_polyhash.pyx",
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
        include_path=[numpy.get_include()],
    )


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            print(f"sparsekit: extension build skipped ({exc}); "
                  "falling back to the pure backend", file=sys.stderr)

    def build_extension(self, ext):
        import numpy

        ext.include_dirs.append(numpy.get_include())
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"sparsekit: building {ext.name} failed ({exc}); "
                  "falling back to the pure backend", file=sys.stderr)


setup(ext_modules=_extensions(), cmdclass={"build_ext": OptionalBuildExt})
