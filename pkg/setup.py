"""Build the optional compiled kernel; the package works without it."""
from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "lietx._ckernel",
                ["src/lietx/_ckernel.pyx"],
                include_dirs=[numpy.get_include()],
                language="c++",
                # keep a*b - c*d unfused so results match the Python fallback bit for bit
                extra_compile_args=["-O2", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": 3},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
