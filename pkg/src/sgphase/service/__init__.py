from . import schemas
from .app import app

__all__ = ["app", "schemas"]
