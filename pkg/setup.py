from setuptools import setup

# The compiled core is optional: the package falls back to the pure numpy
# backend when fsbclab._core is absent, so a missing Cython toolchain must
# not block installation.
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "fsbclab._core",
                ["src/fsbclab/_core.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
