import os

import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

openmp = [] if os.environ.get("SQGOBSTACLE_NO_OPENMP") else ["-fopenmp"]

extensions = [
    Extension(
        "sqgobstacle._core",
        ["src/sqgobstacle/_core.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3"] + openmp,
        extra_link_args=openmp,
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
