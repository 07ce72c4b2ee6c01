"""Build script: compiles the graph kernel extension when Cython and a C
compiler are available. The package still works without it (pure-Python
fallback selected at import), so the extension is marked optional."""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "molbbo.graphcore._cygraph",
                sources=["src/molbbo/graphcore/_cygraph.pyx"],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
