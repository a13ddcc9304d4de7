from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "quanco._kernels._core",
        ["src/quanco/_kernels/_core.pyx"],
        extra_compile_args=["-O3"],
    ),
]

setup(ext_modules=cythonize(extensions, language_level=3))
