import contextlib
import threading
import typing

_T = typing.TypeVar('_T')


class Synchronized(typing.Generic[_T]):
    """
    A value shared between worker threads, guarded by a reentrant lock.

    The value is changed only inside `with shared.lock() as value:`.
    """

    _value : _T
    _lock : threading.RLock

    def __init__( self, value : _T ):
        self._value = value
        self._lock = threading.RLock()

    @contextlib.contextmanager
    def lock(self) -> typing.Iterator[_T]:
        with self._lock:
            yield self._value

    def get(self) -> _T:
        with self._lock:
            return self._value
