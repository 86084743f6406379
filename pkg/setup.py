"""Build script for the optional compiled kernel.

The package is fully functional without the extension (a NumPy fallback is
selected at import time), so a failed compile degrades to a warning rather
than breaking installation.
"""
import sys
import warnings

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001 - any build failure is non-fatal
            warnings.warn(f"compiled kernel build failed, using NumPy fallback: {exc}")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            warnings.warn(f"compiled kernel build failed, using NumPy fallback: {exc}")


def extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError as exc:
        warnings.warn(f"cython/numpy unavailable, skipping compiled kernel: {exc}")
        return []
    from setuptools import Extension

    openmp_compile = ["-fopenmp", "-O3"]
    openmp_link = ["-fopenmp"]
    if sys.platform == "darwin":
        openmp_compile = ["-O3"]
        openmp_link = []
    ext = Extension(
        "wavecrb._kernels._speig",
        ["src/wavecrb/_kernels/_speig.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=openmp_compile,
        extra_link_args=openmp_link,
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
