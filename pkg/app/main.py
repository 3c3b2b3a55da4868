import logging
from contextlib import asynccontextmanager

from fastapi import FastAPI

from app.api.v1.endpoints import router as api_router
from app.core.config import get_settings


@asynccontextmanager
async def lifespan(app: FastAPI):
    logging.getLogger("app").setLevel(get_settings().log_level.upper())
    yield


app = FastAPI(title="Harmonic LTP Toolkit API", lifespan=lifespan)

app.include_router(api_router, prefix="/api/v1")


@app.get("/")
async def root():
    return {"message": "Harmonic LTP Toolkit API is running"}
