"""Ledger database connection and session management."""

from contextlib import contextmanager
from pathlib import Path
from typing import Generator

from sqlalchemy import Engine, create_engine, event
from sqlalchemy.orm import Session, sessionmaker

from .models import Base

LEDGER_NAME = "ledger.db"


def get_database_url(out_dir: Path) -> str:
    """SQLite URL of the ledger inside an output directory."""
    return f"sqlite:///{Path(out_dir) / LEDGER_NAME}"


def create_db_engine(database_url: str) -> Engine:
    """Create the database engine."""
    engine = create_engine(database_url, echo=False)

    # Enable foreign keys for SQLite
    if database_url.startswith("sqlite"):
        @event.listens_for(engine, "connect")
        def set_sqlite_pragma(dbapi_connection, connection_record):
            cursor = dbapi_connection.cursor()
            cursor.execute("PRAGMA foreign_keys=ON")
            cursor.close()

    return engine


# Engines and session factories per database URL
_engines: dict[str, Engine] = {}
_factories: dict[str, sessionmaker] = {}


def get_engine(database_url: str) -> Engine:
    """Get or create the engine for a database URL."""
    if database_url not in _engines:
        _engines[database_url] = create_db_engine(database_url)
    return _engines[database_url]


def get_session_factory(database_url: str) -> sessionmaker:
    """Get or create the session factory for a database URL."""
    if database_url not in _factories:
        _factories[database_url] = sessionmaker(
            bind=get_engine(database_url), expire_on_commit=False
        )
    return _factories[database_url]


def init_db(out_dir: Path) -> str:
    """Create the ledger tables under out_dir; returns the database URL."""
    Path(out_dir).mkdir(parents=True, exist_ok=True)
    url = get_database_url(out_dir)
    Base.metadata.create_all(get_engine(url))
    return url


def dispose_engines() -> None:
    """Close pooled connections (before a ledger directory is removed)."""
    for engine in _engines.values():
        engine.dispose()
    _engines.clear()
    _factories.clear()


@contextmanager
def get_db_session(database_url: str) -> Generator[Session, None, None]:
    """Context manager for database sessions."""
    SessionLocal = get_session_factory(database_url)
    session = SessionLocal()
    try:
        yield session
        session.commit()
    except Exception:
        session.rollback()
        raise
    finally:
        session.close()
