import os
import time
import typing
import logging
import threading
import statistics
from .synchronized import (
    Synchronized,
)

_logger = logging.getLogger(__name__)

_T = typing.TypeVar('_T')
_R = typing.TypeVar('_R')


def resolve_worker_count( workers : int ) -> int:
    """0 means one worker per hardware thread."""
    if workers > 0:
        return workers
    return max( 1, os.cpu_count() or 1 )


class WorkerPool:
    """
    Runs a function over work chunks on concurrent threads.

    Chunks are handed out round-robin, the result list keeps chunk order. The first exception raised
    by any worker is re-raised on the calling thread once every worker has finished.
    Useful speedups need the function to release the GIL, e.g. a numba kernel compiled with nogil.
    """

    _workers : int

    def __init__( self, workers : int = 0 ):
        self._workers = resolve_worker_count( workers )

    @property
    def workers(self) -> int:
        return self._workers

    def map( self, function : typing.Callable[[_T],_R], chunks : typing.Sequence[_T] ) -> list[_R]:
        if len(chunks) == 0:
            return []

        thread_count = min( self._workers, len(chunks) )
        if thread_count == 1:
            return [function(chunk) for chunk in chunks]

        results : Synchronized[dict[int,_R]] = Synchronized( dict() )
        failures : Synchronized[list[BaseException]] = Synchronized( list() )

        def graceful_worker_process( worker_index : int ):
            try:
                for chunk_index in range( worker_index, len(chunks), thread_count ):
                    if failures.get():
                        return
                    result = function( chunks[chunk_index] )
                    with results.lock() as result_map:
                        result_map[chunk_index] = result
            except BaseException as e: # NOSONAR
                with failures.lock() as failure_list:
                    failure_list.append( e )

        threads = [threading.Thread( target=graceful_worker_process, args=(index,) ) for index in range(thread_count)]
        for thread in threads:
            thread.daemon = True
            thread.start()
        for thread in threads:
            thread.join()

        if failures.get():
            raise failures.get()[0]

        result_map = results.get()
        return [result_map[index] for index in range(len(chunks))]


class EventDispatcher(typing.Generic[_T]):

    _listeners : list[typing.Callable[[_T],None]]

    def __init__(self):
        self._listeners = list()

    def register( self, listener : typing.Callable[[_T],None] ) -> None:
        self._listeners.append( listener )

    def forget( self, listener : typing.Callable[[_T],None] ) -> None:
        self._listeners.remove( listener )

    def fire( self, event : _T ) -> None:
        for listener in self._listeners:
            listener(event)


class Stopwatch:
    """Wall-clock timing with time.perf_counter."""

    _start : float
    _elapsed : float | None

    def __init__(self):
        self._start = 0.0
        self._elapsed = None

    def __enter__(self) -> "Stopwatch":
        self._elapsed = None
        self._start = time.perf_counter()
        return self

    def __exit__(self, type, value, traceback):
        self._elapsed = time.perf_counter() - self._start

    @property
    def seconds(self) -> float:
        if self._elapsed is None:
            raise RuntimeError( "Stopwatch is still running." )
        return self._elapsed


def time_repeatedly( function : typing.Callable[[],typing.Any], repetitions : int, warmup : int ) -> list[float]:
    """
    Time function calls after warm-up runs.

    Returns: durations of the timed repetitions in seconds
    """
    for _ in range(warmup):
        function()

    durations = []
    for _ in range(repetitions):
        with Stopwatch() as stopwatch:
            function()
        durations.append( stopwatch.seconds )
    _logger.debug( "timed %d repetitions after %d warm-up runs, median %.6f s", repetitions, warmup, statistics.median(durations) )
    return durations
