"""Run deeply recursive work on a thread with a large stack.

Trees produced by handlers that resume twice can be hundreds of levels
deep, and the printers and normalisers recurse structurally over them.
"""

import sys
import threading

STACK_BYTES = 512 * 1024 * 1024
RECURSION_LIMIT = 200_000


def deep(fn, *args, **kwargs):
    """fn(*args, **kwargs), evaluated with room for deep recursion."""
    if getattr(_local, "inside", False):
        return fn(*args, **kwargs)
    box = {}

    def target():
        _local.inside = True
        try:
            box["value"] = fn(*args, **kwargs)
        except BaseException as e:  # re-raised on the calling thread
            box["error"] = e

    old_stack = threading.stack_size(STACK_BYTES)
    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, RECURSION_LIMIT))
    try:
        t = threading.Thread(target=target)
        t.start()
        t.join()
    finally:
        threading.stack_size(old_stack)
        sys.setrecursionlimit(old_limit)
    if "error" in box:
        raise box["error"]
    return box["value"]


_local = threading.local()
