"""Build script for the optional compiled stepper kernel.

The package works without the extension (a numpy fallback is selected at
import time); the Cython kernel just makes the inner Runge-Kutta loop fast.
"""

import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "jmgtlab._stepper_cy",
        ["src/jmgtlab/_stepper_cy.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(
    ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}),
)
