"""Builds the potshape._core extension by delegating to the CMake project."""

import os
import subprocess
import sys
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class CMakeExtension(Extension):
    def __init__(self, name: str) -> None:
        super().__init__(name, sources=[])


class CMakeBuild(build_ext):
    def build_extension(self, ext: Extension) -> None:
        source_dir = Path(__file__).parent.resolve()
        build_dir = Path(self.build_temp).resolve()
        cfg = "Debug" if self.debug else "Release"
        subprocess.run(
            [
                "cmake",
                "-S", str(source_dir),
                "-B", str(build_dir),
                f"-DCMAKE_BUILD_TYPE={cfg}",
                # Wheel mode: skip the test tree and the build-tree package
                # staging, install targets into the package instead.
                "-DSKBUILD=ON",
                f"-DPython3_EXECUTABLE={sys.executable}",
            ],
            check=True,
        )
        subprocess.run(
            [
                "cmake",
                "--build", str(build_dir),
                "--target", "_core",
                "--parallel", str(os.cpu_count() or 2),
            ],
            check=True,
        )
        ext_path = Path(self.get_ext_fullpath(ext.name))
        ext_path.parent.mkdir(parents=True, exist_ok=True)
        built = build_dir / ext_path.name
        if not built.exists():
            raise FileNotFoundError(f"expected {built} after the CMake build")
        self.copy_file(str(built), str(ext_path))


setup(
    packages=["potshape"],
    package_dir={"potshape": "python/potshape"},
    ext_modules=[CMakeExtension("potshape._core")],
    cmdclass={"build_ext": CMakeBuild},
)
