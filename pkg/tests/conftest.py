"""Shared fixtures: local fixture sites, scripted providers, service factory.

Two transport layers are used. Transport-real tests (timeouts, 403s) run
against a threaded localhost HTTP server. Tests that need many distinct
registrable domains (cache keying) inject a fetcher that serves synthetic
hosts from memory, through the same fetch adapter seam the engine exposes
for headless-browser rendering.
"""

from __future__ import annotations

import random
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional
from urllib.parse import urlparse

import pytest
from fastapi.testclient import TestClient

from policylens.acquisition import AcquisitionConfig, FetchBlockedError
from policylens.llm import GatewayConfig, LlmGateway, MockProvider
from policylens.service import ServiceConfig, create_app
from policylens.store import Store

# ---------------------------------------------------------------------------
# Deterministic policy text
# ---------------------------------------------------------------------------

_WORD_POOL = (
    "data processing consent purpose collection personal information service "
    "provider retention period deletion request account usage analytics cookie "
    "tracking profile marketing partner transfer security encryption access "
    "rights controller processor legal basis legitimate interest contract "
    "storage device browser identifier address country disclosure obligation "
    "withdraw object portability complaint authority safeguard measure policy"
).split()


def make_words(count: int, seed: int) -> str:
    rng = random.Random(seed)
    return " ".join(rng.choice(_WORD_POOL) for _ in range(count))


def policy_page(body_words: str, title: str = "Privacy Policy") -> str:
    paragraphs = []
    words = body_words.split()
    for start in range(0, len(words), 40):
        paragraphs.append("<p>" + " ".join(words[start:start + 40]) + "</p>")
    return (
        "<html><head><title>{title}</title><script>track();</script></head>"
        "<body><nav><a href='/'>Home</a> <a href='/shop'>Shop</a></nav>"
        "<main>{body}</main>"
        "<footer><a href='/imprint'>Imprint</a> Contact us</footer>"
        "</body></html>"
    ).format(title=title, body="".join(paragraphs))


def landing_page(
    policy_href: Optional[str],
    policy_text: str = "Privacy Policy",
    extra_footer_links: tuple[tuple[str, str], ...] = (("/imprint", "Imprint"),),
    with_anchors: bool = True,
) -> str:
    footer_links = ""
    if with_anchors:
        footer_links = " ".join(
            f"<a href='{href}'>{text}</a>" for href, text in extra_footer_links
        )
        if policy_href is not None:
            footer_links += f" <a href='{policy_href}'>{policy_text}</a>"
    return (
        "<html><head><title>Fixture Shop</title></head>"
        "<body><nav><a href='/shop'>Shop</a> <a href='/cart'>Cart</a></nav>"
        "<main><h1>Welcome to the fixture shop</h1>"
        "<p>Books delivered fast and cheap every day.</p></main>"
        f"<footer>{footer_links}</footer>"
        "</body></html>"
    )


# ---------------------------------------------------------------------------
# 20-site acquisition corpus served over real localhost HTTP
# ---------------------------------------------------------------------------


@dataclass
class FixtureSite:
    name: str
    expected_status: str
    pages: dict[str, tuple] = field(default_factory=dict)  # path -> route tuple
    policy_words: int = 0


def build_fixture_corpus() -> list[FixtureSite]:
    """14 Ok, 3 LinkNotFound, 2 FetchBlocked, 1 TooShort fixture sites."""
    sites: list[FixtureSite] = []

    ok_specs = [
        ("s01", 1200, "/privacy", "Privacy Policy"),
        ("s02", 150, "/privacy-policy", "Privacy Policy"),
        ("s03", 400, "/datenschutz", "Datenschutzerklärung"),
        ("s04", 2500, "/legal/privacy", "Privacy"),
        ("s05", 300, "/privacy", "Our privacy policy"),
        ("s06", 101, "/privacy", "Privacy"),
        ("s07", 800, "/data-protection", "Data Protection"),
        ("s08", 650, "/datenschutz", "Datenschutz"),
        ("s09", 980, "/privacy.html", "privacy policy"),
        ("s10", 230, "/privacy", "PRIVACY POLICY"),
        ("s11", 175, "/policies/privacy", "Privacy notice"),  # href match
        ("s12", 540, "/privacy", "Read our Privacy Policy here"),
        ("s13", 310, "/privacy", "Privacy Policy"),
        ("s14", 420, "/privacy", "Privacy Policy"),
    ]
    for name, words, href, text in ok_specs:
        body = make_words(words, seed=hash(name) % 100_000)
        site = FixtureSite(name=name, expected_status="ok", policy_words=words)
        link_text = text if "privacy" in text.lower() or "datenschutz" in text.lower() else "Legal"
        site.pages["/"] = ("html", landing_page(f"/{name}{href}", link_text))
        site.pages[href] = ("html", policy_page(body))
        sites.append(site)

    for name, landing in [
        ("s15", landing_page(None, with_anchors=False)),            # zero anchors
        ("s16", landing_page(None)),                                 # imprint only
        ("s17", landing_page("/terms", "Terms of Service",
                             extra_footer_links=(("/imprint", "Imprint"),
                                                 ("/contact", "Contact")))),
    ]:
        site = FixtureSite(name=name, expected_status="link_not_found")
        site.pages["/"] = ("html", landing)
        sites.append(site)

    blocked = FixtureSite(name="s18", expected_status="fetch_blocked")
    blocked.pages["/"] = ("html", landing_page("/s18/privacy"))
    blocked.pages["/privacy"] = ("status", 403)
    sites.append(blocked)

    slow = FixtureSite(name="s19", expected_status="fetch_blocked")
    slow.pages["/"] = ("html", landing_page("/s19/privacy"))
    slow.pages["/privacy"] = ("sleep", 3.0)
    sites.append(slow)

    short = FixtureSite(name="s20", expected_status="too_short", policy_words=40)
    short.pages["/"] = ("html", landing_page("/s20/privacy"))
    short.pages["/privacy"] = ("html", policy_page(make_words(40, seed=20)))
    sites.append(short)

    return sites


class _FixtureHandler(BaseHTTPRequestHandler):
    routes: dict[str, tuple] = {}

    def do_GET(self):
        route = self.routes.get(self.path.rstrip("/") or "/") or self.routes.get(self.path)
        if route is None:
            self.send_response(404)
            self.end_headers()
            return
        kind = route[0]
        if kind == "sleep":
            time.sleep(route[1])
            self.send_response(204)
            self.end_headers()
            return
        if kind == "status":
            self.send_response(route[1])
            self.end_headers()
            return
        body = route[1].encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "text/html; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture(scope="session")
def fixture_corpus():
    return build_fixture_corpus()


@pytest.fixture(scope="session")
def fixture_server(fixture_corpus):
    """Base URL of a localhost server hosting every fixture site under /<name>/."""
    routes: dict[str, tuple] = {}
    for site in fixture_corpus:
        for path, route in site.pages.items():
            key = f"/{site.name}{path}".rstrip("/") or "/"
            routes[key] = route
    handler = type("Handler", (_FixtureHandler,), {"routes": routes})
    server = ThreadingHTTPServer(("127.0.0.1", 0), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()


# ---------------------------------------------------------------------------
# In-memory fetcher for synthetic hosts (distinct registrable domains)
# ---------------------------------------------------------------------------


def make_fake_fetcher(sites: dict[str, dict[str, str]], blocked: set[str] = frozenset()):
    """Fetcher serving {host: {path: html}} maps; unknown URLs are blocked."""

    def fetch(url: str, timeout: float) -> str:
        parsed = urlparse(url)
        host = parsed.hostname or ""
        path = parsed.path or "/"
        if url in blocked or host in blocked:
            raise FetchBlockedError(f"blocked fixture URL {url}")
        pages = sites.get(host)
        if pages is None or path not in pages:
            raise FetchBlockedError(f"unknown fixture URL {url}")
        return pages[path]

    return fetch


def fake_site(policy_words: int = 300, seed: int = 1,
              policy_text: Optional[str] = None) -> dict[str, str]:
    body = policy_text if policy_text is not None else make_words(policy_words, seed)
    return {
        "/": landing_page("/privacy"),
        "/privacy": policy_page(body),
    }


# ---------------------------------------------------------------------------
# Mock model responses
# ---------------------------------------------------------------------------


def assessment_text(criteria: list[tuple[str, int]], with_preamble: bool = True) -> str:
    """A well-formed assessment response in the step-3 output shape."""
    parts = []
    if with_preamble:
        names = ", ".join(name for name, _ in criteria)
        parts.append(f"Criteria: {names}")
        parts.append("")
        parts.append("Analysis: The policy was reviewed against each criterion.")
        parts.append("")
        parts.append("Evaluation:")
        parts.append("")
    for name, score in criteria:
        parts.append(f"{name}: {score}/5")
        parts.append(f"The policy was rated {score} out of 5 for {name.lower()}.")
        parts.append("")
    parts.append("Conclusion: The evaluation covers all identified criteria.")
    return "\n".join(parts)


def suggestion_text(a: str, b: str, c: str, inline: bool = False) -> str:
    if inline:
        return f"1. {a} 2. {b} 3. {c}"
    return f"1. {a}\n2. {b}\n3. {c}"


DEFAULT_CRITERIA = [
    ("Data minimization", 2),
    ("Transparency", 3),
    ("Purpose Limitation", 4),
    ("Security", 3),
]


@pytest.fixture
def mock_provider():
    return MockProvider()


@pytest.fixture
def gateway(mock_provider):
    return LlmGateway(mock_provider, GatewayConfig())


# ---------------------------------------------------------------------------
# Service factory
# ---------------------------------------------------------------------------


@dataclass
class ServiceHarness:
    client: TestClient
    provider: MockProvider
    store: Store
    config: ServiceConfig


@pytest.fixture
def make_service(tmp_path):
    """Build a TestClient-backed service over in-memory fixture sites."""
    created: list[TestClient] = []

    def factory(
        sites: dict[str, dict[str, str]],
        provider: Optional[MockProvider] = None,
        store_path: Optional[str] = None,
        study_mode: bool = False,
        store: Optional[Store] = None,
        min_words: int = 100,
    ) -> ServiceHarness:
        provider = provider or MockProvider()
        config = ServiceConfig(
            provider_kind="mock",
            store_path=store_path or str(tmp_path / f"store-{len(created)}.db"),
            study_mode=study_mode,
            min_words=min_words,
        )
        acquisition = AcquisitionConfig(
            fetch_timeout=2.0,
            min_words=min_words,
            fetcher=make_fake_fetcher(sites),
        )
        app = create_app(config, provider=provider, store=store, acquisition=acquisition)
        client = TestClient(app)
        created.append(client)
        return ServiceHarness(
            client=client, provider=provider, store=app.state.store, config=config
        )

    yield factory
    for client in created:
        client.close()
