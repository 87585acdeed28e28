from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "dsppack._simcore",
                sources=["src/dsppack/_simcore.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    # Pure-Python fallback backend is selected at import time, so a missing
    # compiler toolchain only costs speed, not functionality.
    ext_modules = []

setup(ext_modules=ext_modules)
