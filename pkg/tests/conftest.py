import pytest

from securemart.api import ApiService
from securemart.app import Platform
from securemart.config import FAST_HASH_OVERRIDES, PlatformConfig
from securemart.harness.client import ApiClient
from securemart.harness.clock import SimClock


def make_config(**overrides) -> PlatformConfig:
    base = dict(sandbox=True, **FAST_HASH_OVERRIDES)
    base.update(overrides)
    return PlatformConfig(**base)


def make_platform(clock=None, **overrides) -> Platform:
    kwargs = {"clock": clock} if clock is not None else {}
    return Platform(make_config(**overrides), **kwargs)


@pytest.fixture
def clock():
    return SimClock()


@pytest.fixture
def platform(clock):
    plat = make_platform(
        clock=clock,
        otp_required_for_login=False,
        otp_required_for_payment=False,
    )
    yield plat
    plat.close()


@pytest.fixture
def otp_platform(clock):
    plat = make_platform(clock=clock)
    yield plat
    plat.close()


@pytest.fixture
def api(platform):
    return ApiService(platform)


@pytest.fixture
def client(api):
    return ApiClient(api)


@pytest.fixture
def admin(platform):
    return platform.auth.register("admin@test.local", "admin-pass-123", role="admin")


def seed_product(platform, admin, name="Widget", price=500, stock=10,
                 category_name="General"):
    existing = {c.name: c for c in platform.catalog.list_categories()}
    category = existing.get(category_name) or platform.catalog.create_category(
        admin, category_name)
    return platform.catalog.create_product(admin, {
        "name": name,
        "category_id": category.id,
        "unit_price": price,
        "stock": stock,
    })
