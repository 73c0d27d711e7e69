"""Build script for the optional compiled edit-distance kernels.

The package is fully functional without the extension: docstruct.fuzzy
falls back to the pure-Python kernels in docstruct._editops_py when the
compiled module is absent.
"""

from setuptools import setup
from setuptools.extension import Extension

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "docstruct._editops",
                sources=["src/docstruct/_editops.pyx"],
                optional=True,
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
