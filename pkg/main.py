from contextlib import asynccontextmanager

from fastapi import FastAPI
from fastapi.exceptions import RequestValidationError
from starlette.exceptions import HTTPException as StarletteHTTPException

from app.routes.codes import router as codes_router
from app.routes.runs import router as runs_router
from app.services.config import RUNS_ROOT
from app.utils.logger import logger
from app.utils.exceptions import AppException
from app.utils.error_handler import (
    app_exception_handler,
    http_exception_handler,
    validation_exception_handler,
    general_exception_handler,
)


@asynccontextmanager
async def lifespan(app: FastAPI):
    logger.info(f"Starting BinPlay API (runs root: {RUNS_ROOT})")

    yield

    logger.info("Shutting down BinPlay API")


app = FastAPI(
    title="BinPlay API",
    version="1.0.0",
    lifespan=lifespan
)

# Exception handlers
app.add_exception_handler(AppException, app_exception_handler)
app.add_exception_handler(StarletteHTTPException, http_exception_handler)
app.add_exception_handler(RequestValidationError, validation_exception_handler)
app.add_exception_handler(Exception, general_exception_handler)

# Health
@app.get("/health", tags=["Health"])
def health_check():
    return {"status": "UP", "service": "binplay"}

# Routers
app.include_router(codes_router)
app.include_router(runs_router)
