import pathlib

import pytest

CACHE = pathlib.Path(__file__).parent / "_cache"
SEED_RNG = 3264


@pytest.fixture(scope="session")
def seed_db():
    """The 3264-solution start database; built once, cached on disk.

    The build is a long monodromy run, so the database is keyed by its rng
    seed and reused across sessions.  Deleting tests/_cache forces a fresh
    build.
    """
    from steiner.seeds import build_seed_database, load_db, save_db

    CACHE.mkdir(exist_ok=True)
    path = CACHE / f"seed-{SEED_RNG}.json"
    if path.exists():
        return load_db(path)
    db = build_seed_database(rng_seed=SEED_RNG)
    save_db(db, path)
    return db


@pytest.fixture(scope="session")
def seed_db_path(seed_db):
    return str(CACHE / f"seed-{SEED_RNG}.json")


@pytest.fixture(scope="session")
def fulton():
    from steiner.instances import fulton_instance

    return fulton_instance()
