import subprocess
import sys
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class CmakeExtension(Extension):
    def __init__(self, name):
        super().__init__(name, sources=[])


class CmakeBuild(build_ext):
    # Delegates to the repository's CMake build so the extension is compiled
    # exactly as the native targets are; SKBUILD=ON selects the wheel layout.
    def build_extension(self, ext):
        out_dir = Path(self.get_ext_fullpath(ext.name)).resolve().parent
        source_dir = Path(__file__).resolve().parent
        build_dir = Path(self.build_temp).resolve()
        build_dir.mkdir(parents=True, exist_ok=True)
        subprocess.run(
            [
                "cmake",
                "-S", str(source_dir),
                "-B", str(build_dir),
                "-DCMAKE_BUILD_TYPE=Release",
                f"-DCMAKE_LIBRARY_OUTPUT_DIRECTORY={out_dir}",
                f"-DPython_EXECUTABLE={sys.executable}",
                "-DSKBUILD=ON",
                "-DGCMM_BUILD_TESTS=OFF",
            ],
            check=True,
        )
        subprocess.run(
            ["cmake", "--build", str(build_dir), "--target", "_core", "--parallel"],
            check=True,
        )


setup(
    ext_modules=[CmakeExtension("gcmm._core")],
    cmdclass={"build_ext": CmakeBuild},
)
