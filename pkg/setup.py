from setuptools import setup

try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension
except ImportError:  # no build toolchain: pure-Python fallback only
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("hsplit._kernels", ["src/hsplit/_kernels.pyx"],
                   include_dirs=[np.get_include()],
                   define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")])],
        language_level="3",
    )

setup(ext_modules=ext_modules)
