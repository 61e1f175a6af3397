"""Build the optional compiled simulation kernel.

If Cython or a C compiler is unavailable the package still installs and
falls back to the NumPy interpreter in ``radar.simulation._fallback``.
"""

import os

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001
            print(f"warning: compiled kernel not built ({exc}); using NumPy fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            print(f"warning: failed to build {ext.name} ({exc}); using NumPy fallback")


def extensions():
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        return []
    from setuptools import Extension

    flags = ["-O3", "-ffp-contract=off"]
    if os.environ.get("RADAR_NATIVE"):
        flags.append("-march=native")
    ext = Extension(
        "radar.simulation._kernel",
        ["src/radar/simulation/_kernel.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=flags,
    )
    return cythonize([ext], compiler_directives={"language_level": "3"}, quiet=True)


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
