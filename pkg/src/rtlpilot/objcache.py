"""Minimal content-addressed object cache used as Verilator's OBJCACHE hook.

Invoked as `<python> -m rtlpilot.objcache <compiler> <args...>` by the
generated makefiles. Verilator runtime sources are keyed by their path and
contents; generated model sources are keyed by every generated file in the
build directory, so any change to the design misses the cache.
"""
from __future__ import annotations

import hashlib
import os
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path


def cache_root() -> Path:
    root = os.environ.get("RTLPILOT_OBJCACHE")
    if root:
        return Path(root)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "rtlpilot" / "objcache"


def _key(argv: list[str]) -> str | None:
    if "-c" not in argv or "-o" not in argv:
        return None
    out_i = argv.index("-o") + 1
    args = [a for i, a in enumerate(argv) if i != out_i]
    sources = [a for a in argv[1:] if a.endswith((".cpp", ".cc", ".c"))]
    if len(sources) != 1:
        return None
    src = Path(sources[0])
    h = hashlib.sha256()
    h.update("\0".join(args).encode())
    h.update(src.read_bytes())
    if src.resolve().parent == Path.cwd().resolve():
        for p in sorted(Path.cwd().iterdir()):
            if p.suffix in (".cpp", ".h") and p.is_file():
                h.update(p.name.encode())
                h.update(p.read_bytes())
    return h.hexdigest()


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    key = _key(argv)
    if key is None:
        return subprocess.call(argv)
    out = Path(argv[argv.index("-o") + 1])
    cached = cache_root() / key[:2] / f"{key}.o"
    if cached.exists():
        shutil.copyfile(cached, out)
        return 0
    rc = subprocess.call(argv)
    if rc == 0 and out.exists():
        cached.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=cached.parent, suffix=".tmp")
        os.close(fd)
        shutil.copyfile(out, tmp)
        os.replace(tmp, cached)
    return rc


if __name__ == "__main__":
    sys.exit(main())
