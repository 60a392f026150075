"""Build script for the optional compiled beamforming core.

The package works without the extension (a NumPy fallback is selected at
import time), so any build failure here downgrades to a pure-Python install
instead of aborting.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "spinsar._kernels_c",
                ["src/spinsar/_kernels_c.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3", "-fopenmp"],
                extra_link_args=["-fopenmp"],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # noqa: BLE001
    print(f"spinsar: building without compiled kernels ({exc})")

setup(ext_modules=ext_modules)
