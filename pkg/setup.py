"""Build script for the compiled kernel extension.

The extension is optional: if Cython or a C compiler is unavailable the
package installs anyway and falls back to the pure-numpy kernels at import
time (see ricdiag._backend).
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "ricdiag._kernels",
                sources=["src/ricdiag/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                # -ffp-contract=off keeps float arithmetic bit-identical to
                # the numpy fallback (no FMA contraction of dx*dx + dy*dy).
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        language_level="3",
    )

setup(ext_modules=ext_modules)
