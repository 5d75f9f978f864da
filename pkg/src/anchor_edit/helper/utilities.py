from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Iterable, Optional, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def run_once(func: Callable) -> Callable:
    """Decorator to ensure a function is called exactly one time"""
    def wrapper(*args, **kwargs):
        if not hasattr(wrapper, '__called'):
            setattr(wrapper, '__result', func(*args, **kwargs))
            setattr(wrapper, '__called', True)
        return getattr(wrapper, '__result')
    return wrapper


class LazyImporter:
    """Lazy import manager for optional heavy dependencies"""

    def __init__(self, module_name: str, package: Optional[str] = None):
        self.module_name = module_name
        self.package = package
        self._module = None

    def __getattr__(self, name: str) -> Any:
        if self._module is None:
            self._module = __import__(self.module_name, fromlist=[''], level=0)
        return getattr(self._module, name)


def ordered_map(func: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    """
    Map `func` over `items`, returning results in input order.

    With threads > 1 the calls run on a thread pool; the result list is the same either way.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(func, items))
