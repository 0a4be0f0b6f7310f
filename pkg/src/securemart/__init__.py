"""securemart: a self-contained secure e-commerce platform.

A document store with optimistic concurrency underpins a product catalog,
password+OTP+federated authentication, cart/order state machines, a
simulated payment stack (tokenization vault, envelope encryption, issuer
rules), a login anomaly monitor, a JSON API, and a deterministic test
harness that reproduces the platform's usability and security claims.
"""

from .api import ApiRequest, ApiResponse, ApiService
from .app import Platform
from .config import VERSION, PlatformConfig
from .kernel import DocumentStore

__version__ = VERSION

__all__ = [
    "ApiRequest",
    "ApiResponse",
    "ApiService",
    "DocumentStore",
    "Platform",
    "PlatformConfig",
    "__version__",
]
