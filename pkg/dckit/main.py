import logging

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from dckit import __version__
from dckit.config import settings
from dckit.errors import DCKitError
from dckit.routers import jets, norms, sequences

logging.basicConfig(level=getattr(logging, settings.log_level.upper(), logging.WARNING))
logger = logging.getLogger(__name__)

# Initialize FastAPI app
app = FastAPI(
    title="dckit API",
    description="Numerical checks for Denjoy-Carleman classes",
    version=__version__,
    docs_url="/docs",
    redoc_url="/redoc"
)

# Add CORS middleware
app.add_middleware(
    CORSMiddleware,
    allow_origins=settings.cors_origins,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# Include routers
app.include_router(sequences.router)
app.include_router(jets.router)
app.include_router(norms.router)


@app.exception_handler(DCKitError)
def dckit_error_handler(request: Request, exc: DCKitError):
    """Usage errors become 400, numeric failures 422."""
    status_code = 400 if exc.usage else 422
    logger.info("%s %s -> %d %s", request.method, request.url.path, status_code, exc.code)
    return JSONResponse(status_code=status_code, content={"detail": exc.message, "code": exc.code})


@app.get("/")
def read_root():
    """Root endpoint with API information."""
    return {
        "message": "dckit API - Denjoy-Carleman class toolkit",
        "version": __version__,
        "docs": "/docs",
        "status": "active"
    }


@app.get("/health")
def health_check():
    """Health check endpoint."""
    return {
        "status": "healthy",
        "environment": settings.environment,
        "thresholds": settings.thresholds()
    }


if __name__ == "__main__":
    import uvicorn
    uvicorn.run(app, host="0.0.0.0", port=8000)
