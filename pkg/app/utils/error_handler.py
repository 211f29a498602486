"""
Error handling for the HTTP service and the command line
"""
import sys

from fastapi import Request, status
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from starlette.exceptions import HTTPException as StarletteHTTPException

from app.utils.exceptions import AppException
from app.utils.logger import logger


async def app_exception_handler(request: Request, exc: AppException) -> JSONResponse:
    """Handle custom application exceptions"""
    logger.bind(
        error_code=exc.error_code,
        status_code=exc.status_code,
        path=request.url.path,
        method=request.method,
    ).error(f"Application error: {exc.message}")

    return JSONResponse(
        status_code=exc.status_code,
        content={
            "error": True,
            "error_code": exc.error_code,
            "message": exc.message,
            "detail": exc.detail,
            "path": request.url.path,
        },
    )


async def http_exception_handler(request: Request, exc: StarletteHTTPException) -> JSONResponse:
    """Handle FastAPI HTTP exceptions"""
    logger.bind(
        status_code=exc.status_code,
        path=request.url.path,
        method=request.method,
    ).warning(f"HTTP exception: {exc.detail}")

    return JSONResponse(
        status_code=exc.status_code,
        content={
            "error": True,
            "error_code": "HTTP_ERROR",
            "message": exc.detail,
            "detail": exc.detail,
            "path": request.url.path,
        },
    )


async def validation_exception_handler(request: Request, exc: RequestValidationError) -> JSONResponse:
    """Handle request validation errors"""
    errors = exc.errors()
    logger.bind(path=request.url.path, method=request.method).warning(f"Validation error: {errors}")

    return JSONResponse(
        status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
        content={
            "error": True,
            "error_code": "VALIDATION_ERROR",
            "message": "Validation error",
            "detail": "Invalid request parameters",
            "errors": [{"loc": list(e.get("loc", ())), "msg": e.get("msg")} for e in errors],
            "path": request.url.path,
        },
    )


async def general_exception_handler(request: Request, exc: Exception) -> JSONResponse:
    """Handle all other unhandled exceptions"""
    logger.bind(
        error_type=type(exc).__name__,
        path=request.url.path,
        method=request.method,
    ).exception(f"Unhandled exception: {str(exc)}")

    return JSONResponse(
        status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
        content={
            "error": True,
            "error_code": "INTERNAL_SERVER_ERROR",
            "message": "Internal server error",
            "detail": "An unexpected error occurred",
            "path": request.url.path,
        },
    )


def format_cli_error(exc: BaseException) -> str:
    """
    Render an exception as one machine-parsable line

    Args:
        exc: The exception that aborted the command

    Returns:
        ``error code=<CODE> message="<text>"``
    """
    if isinstance(exc, AppException):
        code, message = exc.error_code, exc.message
    else:
        code, message = "INTERNAL_ERROR", f"{type(exc).__name__}: {exc}"
    message = " ".join(str(message).split()).replace('"', "'")
    return f'error code={code} message="{message}"'


def report_cli_error(exc: BaseException) -> int:
    """Log the failure, print the one-line error to stderr and return the exit status"""
    if isinstance(exc, AppException):
        logger.bind(error_code=exc.error_code).debug(f"Command failed: {exc.message}")
        status_code = 2
    else:
        logger.opt(exception=exc).error(f"Unexpected failure: {exc}")
        status_code = 1
    print(format_cli_error(exc), file=sys.stderr)
    return status_code
