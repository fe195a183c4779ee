import os

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

_np_root = os.path.dirname(np.__file__)

extensions = [
    Extension(
        "sinai._core",
        ["src/sinai/_core.pyx"],
        include_dirs=[np.get_include()],
        library_dirs=[
            os.path.join(_np_root, "random", "lib"),
            os.path.join(_np_root, "_core", "lib"),
        ],
        libraries=["npyrandom", "npymath"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
]

setup(ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}))
