import os
import sys

# Under ctest, import the module from the build tree even when an editable
# install is also present (its import hook would otherwise win).
_build = os.environ.get("JIGSAW_PYTHON_BUILD_DIR")
if _build:
    sys.meta_path[:] = [f for f in sys.meta_path if type(f).__name__ != "ScikitBuildRedirectingFinder"]
    sys.path.insert(0, _build)
