import typing
import datetime
import logging
import pathlib
import traceback
import threading
from .interface import (
    SpdmError,
    ConfigError,
)

_logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class ErrorHandler:
    """
    Runs command handlers and turns the package's exceptions into exit codes.

    ConfigError means the command was used wrongly (exit code 1), any other SpdmError means the data
    cannot be processed (exit code 2). Anything else is a bug: it is logged with its traceback and
    re-raised.
    """

    _error_log_path : pathlib.Path | None
    _local : threading.local

    def __init__( self, error_log_path : str | pathlib.Path | None = None ):
        self._error_log_path = None if error_log_path is None else pathlib.Path( error_log_path )
        self._local = threading.local()

    @property
    def error_log_path(self) -> pathlib.Path | None:
        return self._error_log_path

    def handle_gracefully( self, handler : typing.Callable[..., int | None], context : str, *args, **kwargs ) -> int:
        """
        Run handler and report any exception.

        Parameters:
            handler - command handler, returns an exit code or None for success
            context - error context if one occurs, e.g. "Conversion has failed."
            args, kwargs - arguments to be passed to handler

        Returns: exit code
        """
        try:
            self._local.depth = 1 + getattr( self._local, "depth", 0 )
            code = handler( *args, **kwargs )
            return EXIT_OK if code is None else code
        except ConfigError as e:
            _logger.error( "%s %s", context, e )
            self.log_error( e, context )
            return EXIT_USAGE
        except SpdmError as e:
            _logger.error( "%s %s", context, e )
            self.log_error( e, context )
            return EXIT_DATA
        except RecursionError as e:
            if self._local.depth > 1:
                raise # do not report from inside a nested handler, the stack is exhausted
            self._report_unexpected( context )
            self.log_error( e, context )
            raise
        except BaseException as e: # NOSONAR
            if isinstance( e, Exception ):
                self._report_unexpected( context )
                self.log_error( e, context )
            raise
        finally:
            self._local.depth -= 1

    def _report_unexpected( self, context : str ) -> None:
        _logger.exception( "%s Internal error.", context )

    def log_error( self, exception : BaseException, context : str ) -> None:
        if self._error_log_path is None:
            return
        try:
            with open( self._error_log_path, "a", encoding="utf-8" ) as file:
                file.write( f"{datetime.datetime.now()}\n\n{format_error_info(exception, context)}\n---\n\n" )
        except OSError as e:
            _logger.warning( "Cannot append to error log %s: %s", self._error_log_path, e )


def format_error_info( exception : BaseException, context : str, limit : int | None = None ) -> str:
    return f"{context}\n\n{''.join(traceback.format_exception(exception, limit=limit))}"
