import numpy as np
from Cython.Build import cythonize
from setuptools import setup

setup(
    ext_modules=cythonize(
        ["src/mcbrp/ensemble/_treekernel.pyx"],
        language_level=3,
    ),
    include_dirs=[np.get_include()],
)
