from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python fallback kernel is used instead
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("auvgnc.core._kernels", ["src/auvgnc/core/_kernels.pyx"],
                   extra_compile_args=["-O3"], optional=True)],
        language_level=3,
    )

setup(ext_modules=ext_modules)
