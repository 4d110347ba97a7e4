from __future__ import annotations

import importlib.machinery
import importlib.util
import logging
import os
import site
import sys
import sysconfig
from functools import lru_cache
from pathlib import Path
from types import ModuleType
from typing import Iterator

from . import divdiff as python_kernels

logger = logging.getLogger(__name__)

VALID_BACKENDS = ("auto", "python", "cython")
BACKEND_ENV = "QRECONE_DIVDIFF_BACKEND"
EXTENSION_NAME = "qrecone.divdiff_cython"
REQUIRED_KERNELS = ("first_divided_differences", "second_divided_differences")


def _extension_candidates() -> Iterator[Path]:
    """Compiled kernels shadowed by a source checkout: local build trees first, then site dirs."""
    project_root = Path(__file__).resolve().parents[1]
    roots = sorted(project_root.glob("build/lib.*"))
    roots += [Path(p) for p in (sysconfig.get_paths().get("platlib"), sysconfig.get_paths().get("purelib")) if p]
    roots += [Path(p) for p in getattr(site, "getsitepackages", lambda: [])()]
    if site.ENABLE_USER_SITE:
        roots.append(Path(site.getusersitepackages()))
    seen: set[Path] = set()
    for root in roots:
        package_dir = (root / "qrecone").resolve()
        if package_dir in seen or package_dir == Path(__file__).resolve().parent:
            continue
        seen.add(package_dir)
        for suffix in importlib.machinery.EXTENSION_SUFFIXES:
            candidate = package_dir / f"divdiff_cython{suffix}"
            if candidate.is_file():
                yield candidate


def _load_extension(path: Path) -> ModuleType | None:
    spec = importlib.util.spec_from_file_location(EXTENSION_NAME, path)
    if spec is None or spec.loader is None:
        return None
    module = importlib.util.module_from_spec(spec)
    sys.modules[EXTENSION_NAME] = module
    try:
        spec.loader.exec_module(module)
    except ImportError as exc:
        logger.debug("skipping %s: %s", path, exc)
        sys.modules.pop(EXTENSION_NAME, None)
        return None
    if not all(hasattr(module, name) for name in REQUIRED_KERNELS):
        sys.modules.pop(EXTENSION_NAME, None)
        return None
    return module


def _compiled_kernels() -> ModuleType | None:
    try:
        from . import divdiff_cython
    except ImportError:
        pass
    else:
        return divdiff_cython
    for path in _extension_candidates():
        module = _load_extension(path)
        if module is not None:
            logger.debug("loaded compiled divided differences from %s", path)
            return module
    return None


@lru_cache(maxsize=None)
def _resolve(mode: str) -> tuple[ModuleType, str]:
    if mode not in VALID_BACKENDS:
        raise ValueError(f"Unknown divided-difference backend '{mode}'. Expected one of: {', '.join(VALID_BACKENDS)}")
    if mode == "python":
        return python_kernels, "python"
    compiled = _compiled_kernels()
    if compiled is not None:
        return compiled, "cython"
    if mode == "cython":
        raise RuntimeError(
            f"{BACKEND_ENV}=cython but the compiled kernels are not built. "
            "Build them with: python -m pip install ."
        )
    logger.debug("divided-difference backend: python (compiled kernels not found)")
    return python_kernels, "python"


def resolve_divdiff_backend(preferred: str | None = None) -> tuple[ModuleType, str]:
    """Kernel module and its name for `preferred`, else $QRECONE_DIVDIFF_BACKEND, else auto."""
    mode = (preferred or os.getenv(BACKEND_ENV, "auto")).strip().lower()
    return _resolve(mode)


def resolve_divdiff_kernels(preferred: str | None = None) -> ModuleType:
    return resolve_divdiff_backend(preferred)[0]
