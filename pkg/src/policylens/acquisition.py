"""Privacy-policy acquisition: locate, fetch, clean, and validate policy pages.

The pipeline is discover -> fetch -> extract -> validate. Every failure mode
is encoded in an AcquisitionStatus; acquire_policy never raises.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from html.parser import HTMLParser
from enum import Enum
from typing import Callable, Optional, Sequence
from urllib.parse import unquote, urljoin, urlparse

import requests

DEFAULT_KEYWORDS: tuple[str, ...] = (
    "privacy policy",
    "privacy",
    "datenschutzerklärung",
    "datenschutz",
    "data protection",
)

DEFAULT_MIN_WORDS = 100
DEFAULT_TIMEOUT = 10.0

# Common multi-level public suffixes, so e.g. shop.example.co.uk keys to
# example.co.uk. Not the full PSL; override by passing a prepared domain.
_MULTI_SUFFIXES = {
    "co.uk", "org.uk", "ac.uk", "gov.uk", "me.uk", "net.uk",
    "com.au", "net.au", "org.au", "edu.au", "gov.au",
    "co.nz", "org.nz", "net.nz",
    "co.jp", "ne.jp", "or.jp", "ac.jp",
    "co.kr", "or.kr",
    "com.br", "org.br", "net.br",
    "com.mx", "com.ar", "com.co", "com.pe",
    "co.in", "org.in", "net.in", "ac.in",
    "co.za", "org.za", "web.za",
    "com.cn", "org.cn", "net.cn",
    "com.tw", "org.tw",
    "com.sg", "com.hk", "com.my", "com.ph", "com.tr", "com.ua",
}


class AcquisitionStatus(str, Enum):
    OK = "ok"
    LINK_NOT_FOUND = "link_not_found"
    FETCH_BLOCKED = "fetch_blocked"
    TOO_SHORT = "too_short"


class LinkNotFoundError(Exception):
    """No anchor on the page matched the privacy-keyword table."""


class FetchBlockedError(Exception):
    """The page could not be retrieved (HTTP error, timeout, or TLS failure)."""


# A fetcher maps (url, timeout) to an HTML string, raising FetchBlockedError
# on failure. The default uses plain HTTP; a headless-browser adapter can be
# plugged in behind the same contract.
Fetcher = Callable[[str, float], str]


@dataclass(frozen=True)
class AcquisitionConfig:
    fetch_timeout: float = DEFAULT_TIMEOUT
    min_words: int = DEFAULT_MIN_WORDS
    keywords: tuple[str, ...] = DEFAULT_KEYWORDS
    fetcher: Optional[Fetcher] = None


@dataclass(frozen=True)
class PolicyDocument:
    """A fetched and cleaned policy text for one registrable domain.

    Invariants: word_count is the whitespace-token count of text;
    a non-OK status always carries empty text.
    """

    domain: str
    source_url: str
    text: str
    word_count: int
    fetched_at: datetime
    status: AcquisitionStatus
    alternates: tuple[str, ...] = ()

    def __post_init__(self):
        if self.word_count != len(self.text.split()):
            raise ValueError("word_count must equal the whitespace-token count of text")
        if self.status is not AcquisitionStatus.OK and self.text:
            raise ValueError("non-OK documents must carry empty text")

    @property
    def ok(self) -> bool:
        return self.status is AcquisitionStatus.OK

    def as_dict(self) -> dict:
        return {
            "domain": self.domain,
            "source_url": self.source_url,
            "text": self.text,
            "word_count": self.word_count,
            "fetched_at": self.fetched_at.isoformat(),
            "status": self.status.value,
            "alternates": list(self.alternates),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PolicyDocument":
        return cls(
            domain=data["domain"],
            source_url=data["source_url"],
            text=data["text"],
            word_count=data["word_count"],
            fetched_at=datetime.fromisoformat(data["fetched_at"]),
            status=AcquisitionStatus(data["status"]),
            alternates=tuple(data.get("alternates", ())),
        )


@dataclass(frozen=True)
class PolicyLinkCandidate:
    url: str
    keyword_index: int
    via_text: bool
    in_footer: bool
    position: int


def registrable_domain(url_or_host: str) -> str:
    """Reduce a URL or hostname to its registrable domain (e.g. example.co.uk).

    IP addresses and single-label hosts (localhost) pass through unchanged.
    """
    host = url_or_host
    if "//" in host or host.startswith(("http:", "https:")):
        host = urlparse(url_or_host).hostname or ""
    host = host.strip().lower().rstrip(".")
    if ":" in host:  # bare host:port or IPv6
        host = host.split(":", 1)[0]
    if not host or re.fullmatch(r"[\d.]+", host):
        return host
    labels = host.split(".")
    if len(labels) <= 2:
        return host
    if ".".join(labels[-2:]) in _MULTI_SUFFIXES:
        return ".".join(labels[-3:])
    return ".".join(labels[-2:])


# ---------------------------------------------------------------------------
# Link discovery
# ---------------------------------------------------------------------------

_FOOTER_HINT = re.compile(r"footer|bottom", re.IGNORECASE)


class _AnchorCollector(HTMLParser):
    """Collects (href, text, in_footer, position) for every <a href> anchor."""

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.anchors: list[tuple[str, str, bool, int]] = []
        self._footer_depth = 0
        self._footer_tags: list[str] = []
        self._current_href: Optional[str] = None
        self._current_text: list[str] = []
        self._current_footer = False

    def _is_footer_region(self, tag: str, attrs: list) -> bool:
        if tag == "footer":
            return True
        for name, value in attrs:
            if name in ("id", "class", "role") and value and _FOOTER_HINT.search(value):
                return True
        return False

    def handle_starttag(self, tag, attrs):
        if self._is_footer_region(tag, attrs):
            self._footer_depth += 1
            self._footer_tags.append(tag)
        if tag == "a":
            href = dict(attrs).get("href")
            if href:
                self._flush()
                self._current_href = href
                self._current_text = []
                self._current_footer = self._footer_depth > 0

    def handle_endtag(self, tag):
        if tag == "a":
            self._flush()
        if self._footer_tags and tag == self._footer_tags[-1]:
            self._footer_tags.pop()
            self._footer_depth -= 1

    def handle_data(self, data):
        if self._current_href is not None:
            self._current_text.append(data)

    def _flush(self):
        if self._current_href is not None:
            text = " ".join("".join(self._current_text).split())
            self.anchors.append(
                (self._current_href, text, self._current_footer, len(self.anchors))
            )
            self._current_href = None
            self._current_text = []

    def close(self):
        super().close()
        self._flush()


def _href_match_text(href: str) -> str:
    path = unquote(urlparse(href).path)
    return re.sub(r"[-_/.+]+", " ", path).casefold()


def discover_policy_candidates(
    page_html: str,
    base_url: str,
    keywords: Sequence[str] = DEFAULT_KEYWORDS,
) -> list[PolicyLinkCandidate]:
    """Rank every anchor that matches the privacy-keyword table.

    Order: keyword priority, then anchor-text matches over href matches,
    then footer-region anchors, then document order. Deterministic for a
    fixed input; permuting non-matching anchors never changes the ranking.
    """
    parser = _AnchorCollector()
    try:
        parser.feed(page_html)
        parser.close()
    except Exception:
        pass  # malformed tail; keep whatever was collected
    folded = [k.casefold() for k in keywords]
    candidates = []
    for href, text, in_footer, position in parser.anchors:
        scheme = urlparse(href).scheme
        if scheme and scheme not in ("http", "https"):
            continue
        if href.startswith("#"):
            continue
        text_fold = text.casefold()
        href_fold = _href_match_text(href)
        kw_index = None
        via_text = False
        for i, kw in enumerate(folded):
            if kw in text_fold:
                kw_index, via_text = i, True
                break
        if kw_index is None:
            for i, kw in enumerate(folded):
                if kw in href_fold:
                    kw_index, via_text = i, False
                    break
        if kw_index is None:
            continue
        candidates.append(
            PolicyLinkCandidate(
                url=urljoin(base_url, href),
                keyword_index=kw_index,
                via_text=via_text,
                in_footer=in_footer,
                position=position,
            )
        )
    candidates.sort(
        key=lambda c: (c.keyword_index, not c.via_text, not c.in_footer, c.position)
    )
    return candidates


def discover_policy_url(
    page_html: str,
    base_url: str,
    keywords: Sequence[str] = DEFAULT_KEYWORDS,
) -> str:
    """Return the best policy-link URL on the page, resolved absolute.

    Raises LinkNotFoundError when no anchor matches any keyword.
    """
    candidates = discover_policy_candidates(page_html, base_url, keywords)
    if not candidates:
        raise LinkNotFoundError(f"no privacy-policy link found on {base_url}")
    return candidates[0].url


# ---------------------------------------------------------------------------
# Fetching
# ---------------------------------------------------------------------------

_USER_AGENT = "policylens/0.1 (+local privacy-policy assessment)"


def _http_fetch(url: str, timeout: float) -> str:
    try:
        response = requests.get(
            url,
            timeout=timeout,
            headers={"User-Agent": _USER_AGENT},
            allow_redirects=True,
        )
    except requests.RequestException as exc:
        raise FetchBlockedError(f"fetch failed for {url}: {exc}") from exc
    if response.status_code >= 400:
        raise FetchBlockedError(f"HTTP {response.status_code} for {url}")
    return response.text


def fetch_page(
    url: str,
    timeout: float = DEFAULT_TIMEOUT,
    fetcher: Optional[Fetcher] = None,
) -> str:
    """Fetch the final served HTML for an absolute http(s) URL.

    Raises FetchBlockedError on HTTP 4xx/5xx, timeout, or TLS failure.
    """
    parsed = urlparse(url)
    if parsed.scheme not in ("http", "https") or not parsed.netloc:
        raise FetchBlockedError(f"not an absolute http(s) URL: {url!r}")
    return (fetcher or _http_fetch)(url, timeout)


# ---------------------------------------------------------------------------
# Text extraction
# ---------------------------------------------------------------------------

_STRIP_TAGS = frozenset(
    {"script", "style", "nav", "header", "footer", "aside", "form",
     "head", "title", "noscript", "template", "svg", "iframe"}
)
_BLOCK_TAGS = frozenset(
    {"address", "article", "blockquote", "br", "caption", "dd", "div", "dl",
     "dt", "fieldset", "figcaption", "figure", "h1", "h2", "h3", "h4", "h5",
     "h6", "hr", "li", "main", "ol", "p", "pre", "section", "table", "td",
     "th", "tr", "ul"}
)


class _TextExtractor(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self._parts: list[str] = []
        self._stripping: list[str] = []

    def handle_starttag(self, tag, attrs):
        if tag in _STRIP_TAGS:
            self._stripping.append(tag)
        elif not self._stripping and tag in _BLOCK_TAGS:
            self._parts.append("\n")

    def handle_startendtag(self, tag, attrs):
        if not self._stripping and tag in _BLOCK_TAGS:
            self._parts.append("\n")

    def handle_endtag(self, tag):
        if tag in _STRIP_TAGS:
            if tag in self._stripping:
                # Drop the matching entry and anything it left unclosed.
                idx = len(self._stripping) - 1 - self._stripping[::-1].index(tag)
                del self._stripping[idx:]
            return
        if not self._stripping and tag in _BLOCK_TAGS:
            self._parts.append("\n")

    def handle_data(self, data):
        if not self._stripping:
            self._parts.append(data)

    def text(self) -> str:
        lines = "".join(self._parts).split("\n")
        cleaned = [" ".join(line.split()) for line in lines]
        return "\n".join(line for line in cleaned if line)


def extract_text(page_html: str) -> str:
    """Reduce HTML to visible plain text.

    Script/style/nav/header/footer/aside/form subtrees are removed, block
    elements become single newlines, and runs of whitespace collapse.
    Idempotent: re-extracting the output yields the output.
    """
    parser = _TextExtractor()
    try:
        parser.feed(page_html)
        parser.close()
    except Exception:
        pass
    return parser.text()


# ---------------------------------------------------------------------------
# Composition
# ---------------------------------------------------------------------------


def _failure(
    domain: str, source_url: str, status: AcquisitionStatus, now: datetime
) -> PolicyDocument:
    return PolicyDocument(
        domain=domain,
        source_url=source_url,
        text="",
        word_count=0,
        fetched_at=now,
        status=status,
    )


def acquire_policy(
    page_url: str,
    config: AcquisitionConfig = AcquisitionConfig(),
    policy_url: Optional[str] = None,
) -> PolicyDocument:
    """Run discover -> fetch -> extract -> validate for one page URL.

    Never raises: every failure is encoded in the returned document's status.
    A caller that already knows the policy URL may pass it to skip discovery.
    """
    now = datetime.now(timezone.utc)
    domain = registrable_domain(page_url)
    alternates: tuple[str, ...] = ()

    if policy_url is None:
        try:
            landing_html = fetch_page(page_url, config.fetch_timeout, config.fetcher)
        except FetchBlockedError:
            return _failure(domain, page_url, AcquisitionStatus.FETCH_BLOCKED, now)
        candidates = discover_policy_candidates(landing_html, page_url, config.keywords)
        if not candidates:
            return _failure(domain, page_url, AcquisitionStatus.LINK_NOT_FOUND, now)
        policy_url = candidates[0].url
        alternates = tuple(
            dict.fromkeys(c.url for c in candidates[1:] if c.url != policy_url)
        )

    try:
        policy_html = fetch_page(policy_url, config.fetch_timeout, config.fetcher)
    except FetchBlockedError:
        return _failure(domain, policy_url, AcquisitionStatus.FETCH_BLOCKED, now)

    text = extract_text(policy_html)
    word_count = len(text.split())
    if word_count < config.min_words:
        return _failure(domain, policy_url, AcquisitionStatus.TOO_SHORT, now)
    return PolicyDocument(
        domain=domain,
        source_url=policy_url,
        text=text,
        word_count=word_count,
        fetched_at=now,
        status=AcquisitionStatus.OK,
        alternates=alternates,
    )
