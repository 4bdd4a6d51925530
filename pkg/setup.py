"""Build hook for the compiled kernel.

``src/mpisp/_kernel.py`` is plain Python annotated for Cython. It is compiled
into ``mpisp._kernel_c``; the uncompiled module stays importable as the
fallback. Floating-point contraction is disabled so both builds produce the
same bits.
"""
import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("MPISP_NO_EXT", "") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:  # pragma: no cover
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "mpisp._kernel_c",
                    ["src/mpisp/_kernel.py"],
                    extra_compile_args=["-O2", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": 3},
        )

setup(ext_modules=ext_modules)
