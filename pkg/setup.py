"""Build script for the optional compiled kernel extension.

The package works without the extension (a pure-numpy fallback is selected
at import time), so a failed Cython build is downgraded to a warning.
"""

import warnings

from setuptools import setup

try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "vlm6d._kernels_c",
                ["src/vlm6d/_kernels_c.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - build-env dependent
    warnings.warn(f"compiled kernels disabled: {exc}")
    ext_modules = []

setup(ext_modules=ext_modules)
