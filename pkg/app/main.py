from contextlib import asynccontextmanager
from fastapi import FastAPI
from app.api import certify, pub, radii
from app.core.config import settings
from app.core.logging import configure_logging
import logging

configure_logging()

# Create a logger instance
logger = logging.getLogger(__name__)

@asynccontextmanager
async def lifespan(app: FastAPI):
    # Startup
    logger.info(f"Starting up {settings.PROJECT_NAME} v{settings.VERSION}")
    yield
    # Shutdown
    logger.info(f"Shutting down {settings.PROJECT_NAME}")

app = FastAPI(
    title=settings.PROJECT_NAME,
    version=settings.VERSION,
    description="Randomized-smoothing certification: confidence bounds, certified radii, Lipschitz constants",
    lifespan=lifespan
)

# Include routers
app.include_router(certify.router, prefix=f"{settings.API_V1_STR}/certify", tags=["certify"])
app.include_router(radii.router, prefix=f"{settings.API_V1_STR}/radii", tags=["radii"])
app.include_router(pub.router, prefix=f"{settings.API_V1_STR}/pub", tags=["pub"])

@app.get("/")
async def root():
    return {"message": f"Welcome to {settings.PROJECT_NAME}", "version": settings.VERSION}

@app.get("/health")
async def health_check():
    return {"status": "healthy"}
