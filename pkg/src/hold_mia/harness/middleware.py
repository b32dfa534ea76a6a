"""Wrappers applied around every command handler."""

from __future__ import annotations

import time
from typing import Any

import structlog

from .endpoints import (
    EXIT_FAILURE,
    EXIT_USAGE,
    CommandHandler,
    CommandRequest,
    CommandResult,
)
from .serializers import is_usage_error, serialize_exception

logger = structlog.get_logger(__name__)


class LoggingMiddleware:
    """
    Logging middleware.

    Logs the command name on entry, and exit code plus duration on exit.
    """

    def __init__(self, handler: CommandHandler) -> None:
        self._handler = handler

    def handle(self, request: CommandRequest) -> CommandResult:
        log = logger.bind(command=request.command)
        given = sorted(k for k, v in request.options.items() if v is not None)
        log.info("command_started", options=given)
        started = time.perf_counter()
        result = self._handler.handle(request)
        log.info(
            "command_finished",
            exit_code=result.exit_code,
            seconds=round(time.perf_counter() - started, 3),
        )
        return result


class ErrorMiddleware:
    """Turns any exception into an error record; exit 2 for usage errors, else 1."""

    def __init__(self, handler: CommandHandler) -> None:
        self._handler = handler

    def handle(self, request: CommandRequest) -> CommandResult:
        try:
            return self._handler.handle(request)
        except Exception as exc:  # noqa: BLE001
            code = EXIT_USAGE if is_usage_error(exc) else EXIT_FAILURE
            logger.error(
                "command_failed",
                command=request.command,
                error=type(exc).__name__,
                message=str(exc),
                exit_code=code,
            )
            return CommandResult(code, serialize_exception(exc))


class MiddlewareChain:
    """
    Chain multiple middleware together.

    Usage:
        chain = MiddlewareChain(router)
        chain.add(LoggingMiddleware)
        chain.add(ErrorMiddleware)
        handler = chain.build()

    Middleware added last runs outermost.
    """

    def __init__(self, endpoint: CommandHandler) -> None:
        self._endpoint = endpoint
        self._layers: list[tuple[type, dict[str, Any]]] = []

    def add(self, middleware_class: type, **kwargs: Any) -> MiddlewareChain:
        """Add middleware to the chain."""
        self._layers.append((middleware_class, kwargs))
        return self

    def build(self) -> CommandHandler:
        """Build the final handler with all middleware applied."""
        handler = self._endpoint
        for middleware_class, kwargs in self._layers:
            handler = middleware_class(handler, **kwargs)
        return handler
