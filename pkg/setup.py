"""Build script: compiles the hot simulation kernel with Cython.

The pure-Python kernel in src/l4sim/_kernel is the source of truth.  At build
time each module is copied into src/l4sim/_ckernel and cythonized; the package
prefers the compiled kernel at import and falls back to the pure one, so a
failed extension build still yields a working (slower) install.
"""

import pathlib
import shutil

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

HERE = pathlib.Path(__file__).parent
KERNEL = HERE / "src" / "l4sim" / "_kernel"
CKERNEL = HERE / "src" / "l4sim" / "_ckernel"

ext_modules = []
if cythonize is not None and KERNEL.is_dir():
    CKERNEL.mkdir(exist_ok=True)
    exts = []
    for src in sorted(KERNEL.glob("*.py")):
        shutil.copyfile(src, CKERNEL / src.name)
        if src.name == "__init__.py":
            continue
        exts.append(
            Extension(
                f"l4sim._ckernel.{src.stem}",
                [str((CKERNEL / src.name).relative_to(HERE))],
            )
        )
    ext_modules = cythonize(
        exts,
        compiler_directives={"language_level": "3"},
        quiet=True,
    )

setup(ext_modules=ext_modules)
