# Build the optional compiled kernels in place with:
#   pip install -e . --no-build-isolation
from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; vqcollide.kernels falls back
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "vqcollide._kernels",
                ["src/vqcollide/_kernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3", "-fcx-limited-range"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
