"""Annotator accounts, bearer tokens, and role-based permissions.

Accounts are provisioned from config at startup; there is no registration.
Tokens are opaque random strings held in memory only: a restart logs
everyone out, which is acceptable for a deployment whose users are a few
drivers, a foreman, and the experimenters.
"""

from __future__ import annotations

import hashlib
import hmac
import secrets
import uuid
from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import Callable

from . import events as _events
from . import labels as _labels
from .errors import InvalidCredentials
from .timeutil import utcnow

ROLE_TRAIN_DRIVER = "train_driver"
ROLE_WORKSHOP_FOREMAN = "workshop_foreman"
ROLE_EXPERIMENTER = "experimenter"
ROLES = (ROLE_TRAIN_DRIVER, ROLE_WORKSHOP_FOREMAN, ROLE_EXPERIMENTER)

# which labeling contexts a role may read and write
ROLE_LABEL_CONTEXTS = {
    ROLE_TRAIN_DRIVER: frozenset({_labels.CONTEXT_RAIL_EVENT}),
    ROLE_WORKSHOP_FOREMAN: frozenset(
        {_labels.CONTEXT_FAULT_FOUND, _labels.CONTEXT_REPAIR_DONE}
    ),
    ROLE_EXPERIMENTER: frozenset(),
}

# which event listings a role may see; the experimenter sees everything
ROLE_EVENT_CONTEXTS = {
    ROLE_TRAIN_DRIVER: frozenset({_events.CONTEXT_RAIL}),
    ROLE_WORKSHOP_FOREMAN: frozenset({_events.CONTEXT_TRAIN_CAR}),
    ROLE_EXPERIMENTER: frozenset(_events.EVENT_CONTEXTS),
}

DASHBOARD_ROUTES = {
    ROLE_TRAIN_DRIVER: "/rails",
    ROLE_WORKSHOP_FOREMAN: "/workshop",
    ROLE_EXPERIMENTER: "/study",
}

_PBKDF2_ITERATIONS = 60_000


def hash_password(password: str) -> str:
    salt = secrets.token_hex(16)
    digest = hashlib.pbkdf2_hmac(
        "sha256", password.encode("utf-8"), bytes.fromhex(salt), _PBKDF2_ITERATIONS
    )
    return f"pbkdf2:sha256:{_PBKDF2_ITERATIONS}:{salt}:{digest.hex()}"


def verify_password(password: str, stored: str) -> bool:
    try:
        scheme, algo, iterations, salt, expected = stored.split(":")
        if scheme != "pbkdf2":
            return False
        digest = hashlib.pbkdf2_hmac(
            algo, password.encode("utf-8"), bytes.fromhex(salt), int(iterations)
        )
    except (ValueError, TypeError):
        return False
    return hmac.compare_digest(digest.hex(), expected)


@dataclass(frozen=True)
class Annotator:
    annotator_id: str
    username: str
    display_name: str
    role: str
    password_hash: str

    def as_dict(self) -> dict:
        return {
            "annotator_id": self.annotator_id,
            "username": self.username,
            "display_name": self.display_name,
            "role": self.role,
        }


@dataclass(frozen=True)
class SessionToken:
    token: str
    annotator_id: str
    issued_at: datetime
    expires_at: datetime


class Authenticator:
    def __init__(
        self,
        annotators: list[Annotator],
        token_lifetime_hours: float = 12.0,
        now: Callable[[], datetime] = utcnow,
    ):
        self._by_username = {a.username: a for a in annotators}
        self._by_id = {a.annotator_id: a for a in annotators}
        self._lifetime = timedelta(hours=token_lifetime_hours)
        self._now = now
        self._tokens: dict[str, SessionToken] = {}
        # verified against for unknown usernames so the timing of a failed
        # login does not reveal whether the account exists
        self._decoy_hash = hash_password(secrets.token_hex(8))

    def login(self, username: str, password: str) -> tuple[SessionToken, Annotator]:
        annotator = self._by_username.get(username)
        stored = annotator.password_hash if annotator else self._decoy_hash
        if not verify_password(password, stored) or annotator is None:
            raise InvalidCredentials("unknown username or wrong password")
        issued = self._now()
        token = SessionToken(
            token=secrets.token_urlsafe(32),
            annotator_id=annotator.annotator_id,
            issued_at=issued,
            expires_at=issued + self._lifetime,
        )
        self._tokens[token.token] = token
        return token, annotator

    def resolve(self, token: str | None) -> Annotator | None:
        """The annotator behind a bearer token, or None if absent/expired."""
        if not token:
            return None
        session = self._tokens.get(token)
        if session is None:
            return None
        if self._now() >= session.expires_at:
            del self._tokens[token]
            return None
        return self._by_id.get(session.annotator_id)


def annotator_from_config(user: dict) -> Annotator:
    """Build an account record from one config entry.

    Accepts either a pre-hashed ``password_hash`` or a plain ``password``
    that is hashed on load (fine for demo configs, discouraged otherwise).
    """
    stored = user.get("password_hash")
    if not stored:
        stored = hash_password(user["password"])
    role = user["role"]
    if role not in ROLES:
        raise ValueError(f"unknown role: {role!r}")
    return Annotator(
        annotator_id=user.get("annotator_id") or "us" + uuid.uuid4().hex[:12],
        username=user["username"],
        display_name=user.get("display_name", user["username"]),
        role=role,
        password_hash=stored,
    )
