"""Build hook for the optional compiled transient kernel.

The package works without the extension (a pure-Python kernel is selected
at import time); building it just makes transient sweeps and calibration
much faster. All metadata lives in pyproject.toml.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("M3DRAM_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
        from setuptools.extension import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "m3dram._transient",
                    [os.path.join("src", "m3dram", "_transient.pyx")],
                    # no FP contraction: results must match the pure-Python
                    # kernel bit for bit
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
