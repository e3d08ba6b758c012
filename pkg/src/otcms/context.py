"""Process/context knowledge the logical detectors combine with evidence.

The engine does not discover its environment: expected protocols and
conduits, identity lists, the zone map and all thresholds are supplied as a
:class:`ContextSpec` file by the asset owner. Compliance facts that cannot
be monitored at all (hardware security, commissioning-phase checks) arrive
through a separate manual-assignment file whose entries are cross-checked
against the catalog; overriding a monitored attribute by hand is refused.
"""

from __future__ import annotations

import ipaddress
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

logger = logging.getLogger(__name__)

DEFAULT_WIRELESS_PROTOCOLS = frozenset({"Bluetooth", "Zigbee"})
DEFAULT_P2P_PROTOCOLS = frozenset({"HTTP"})
DEFAULT_X509_PROTOCOLS = frozenset({"MQTT", "XMPP", "OPCUA", "ModbusTCP"})
DEFAULT_MANAGEMENT_PROTOCOLS = frozenset({"ICMP", "SNMP"})
DEFAULT_IAC_PROTOCOLS = frozenset(
    {"MQTT", "XMPP", "OPCUA", "ModbusTCP", "LDAP", "Kerberos", "EAP", "SSH", "SFTP", "HTTPS"}
)
DEFAULT_SESSION_MAX_MS = 3_600_000


class ContextError(ValueError):
    """Raised for malformed or inconsistent context/manual files."""


@dataclass(frozen=True)
class CommEntry:
    """One whitelisted communication: (src, dst, protocol), ``*`` wildcards allowed.

    ``mandatory`` marks conduits the process cannot run without; used by the
    non-control-network independence check.
    """

    src: str
    dst: str
    protocol: str
    mandatory: bool = False

    def matches(self, src: str, dst: str, protocol: str) -> bool:
        return (
            self.src in ("*", src)
            and self.dst in ("*", dst)
            and self.protocol in ("*", protocol)
        )


@dataclass(frozen=True)
class RateLimit:
    """Sliding-window rate thresholds for one participant pair."""

    window_ms: int
    max_events_per_window: int | None = None
    max_bytes_per_window: int | None = None


@dataclass(frozen=True)
class PasswordPolicy:
    min_length: int = 8
    max_lifetime_days: int | None = None


@dataclass(frozen=True)
class CryptoPolicy:
    approved_suites: frozenset[str] = frozenset()
    min_key_bits: int = 128
    min_protocol_versions: dict[str, str] = field(default_factory=dict)

    def __hash__(self) -> int:  # dict field; hashed by identity-relevant parts
        return hash((self.approved_suites, self.min_key_bits, tuple(sorted(self.min_protocol_versions.items()))))


@dataclass
class ContextSpec:
    """Expected behavior, identity and zone knowledge, policies.

    Empty collections mean "not configured"; detectors that depend on an
    unconfigured section report Indeterminate instead of guessing.
    """

    expected_protocols: frozenset[str] = frozenset()
    expected_communications: tuple[CommEntry, ...] = ()
    expected_ports: frozenset[int] = frozenset()
    known_software_processes: frozenset[tuple[str, str]] = frozenset()
    human_identifiers: frozenset[str] = frozenset()
    mobile_device_identifiers: frozenset[str] = frozenset()
    zone_map: dict[str, str] = field(default_factory=dict)
    zone_sl_target: dict[str, int] = field(default_factory=dict)
    trusted_zones: frozenset[str] = frozenset()
    control_zones: frozenset[str] = frozenset()
    external_prefixes: tuple[str, ...] = ()
    wireless_protocols: frozenset[str] = DEFAULT_WIRELESS_PROTOCOLS
    p2p_protocols: frozenset[str] = DEFAULT_P2P_PROTOCOLS
    iac_capable_protocols: frozenset[str] = DEFAULT_IAC_PROTOCOLS
    x509_capable_protocols: frozenset[str] = DEFAULT_X509_PROTOCOLS
    management_protocols: frozenset[str] = DEFAULT_MANAGEMENT_PROTOCOLS
    rate_spec: dict[tuple[str, str], RateLimit] = field(default_factory=dict)
    password_policy: PasswordPolicy | None = None
    max_failed_attempts: int | None = None
    session_max_ms: int = DEFAULT_SESSION_MAX_MS
    crypto_policy: CryptoPolicy | None = None
    p2p_bandwidth_limit_bytes_per_s: int | None = None

    def __post_init__(self) -> None:
        for zone, target in self.zone_sl_target.items():
            if target not in (1, 2, 3, 4):
                raise ContextError(f"zone_sl_target for {zone!r} must be 1..4, got {target}")
        if self.password_policy is not None and self.password_policy.min_length < 1:
            raise ContextError("password_policy.min_length must be >= 1")
        if self.max_failed_attempts is not None and self.max_failed_attempts < 0:
            raise ContextError("max_failed_attempts must be >= 0")
        if self.session_max_ms <= 0:
            raise ContextError("session_max_ms must be positive")
        networks = []
        for prefix in self.external_prefixes:
            try:
                networks.append(ipaddress.ip_network(prefix))
            except ValueError as exc:
                raise ContextError(f"invalid external prefix {prefix!r}: {exc}") from exc
        object.__setattr__(self, "_external_networks", tuple(networks))

    def matches_communication(self, src: str, dst: str, protocol: str) -> bool:
        return any(entry.matches(src, dst, protocol) for entry in self.expected_communications)

    def demands_protocol(self, src: str, dst: str, protocol: str) -> bool:
        """True when a non-wildcard entry expects exactly this protocol on the conduit."""
        return any(
            entry.protocol == protocol and entry.src in ("*", src) and entry.dst in ("*", dst)
            for entry in self.expected_communications
        )

    def mandatory_communication(self, src: str, dst: str, protocol: str) -> bool:
        return any(
            entry.mandatory and entry.matches(src, dst, protocol)
            for entry in self.expected_communications
        )

    def is_external_address(self, identifier: str) -> bool:
        try:
            address = ipaddress.ip_address(identifier)
        except ValueError:
            return False
        return any(address in network for network in self._external_networks)


@dataclass(frozen=True)
class ManualEntry:
    value: bool
    set_by: str = ""
    date: str = ""
    note: str = ""


@dataclass
class ManualAttributeFile:
    """Auditor-asserted values for catalog attributes of kind manual."""

    entries: dict[str, ManualEntry] = field(default_factory=dict)


@dataclass(frozen=True)
class EntityClass:
    """Classification of one identifier against the context knowledge.

    Tri-state fields are ``True``/``False``/``None``; ``None`` means the
    context gives no evidence either way.
    """

    is_human: bool | None
    is_mobile: bool | None
    zone: str | None
    is_external: bool | None
    zone_trusted: bool | None


def classify_entity(identifier: str, scheme, ctx: ContextSpec) -> EntityClass:
    """Pure classification of ``identifier`` under ``ctx``.

    Humanity follows the identity list or the Username scheme; the list wins
    for accounts it knows about. An identifier is external when it matches a
    configured external prefix, or when it is an unzoned globally routable
    address; private addresses without a zone stay internal.
    """
    from otcms.evidence import IdScheme  # local import avoids a module cycle

    scheme_value = scheme.value if isinstance(scheme, IdScheme) else str(scheme)

    is_human: bool | None = None
    if identifier in ctx.human_identifiers:
        is_human = True
    elif scheme_value == IdScheme.USERNAME.value:
        if ctx.human_identifiers:
            logger.debug(
                "identifier %r uses the Username scheme but is not in the human list; "
                "treating as human by scheme",
                identifier,
            )
        is_human = True

    is_mobile: bool | None = True if identifier in ctx.mobile_device_identifiers else None

    zone = ctx.zone_map.get(identifier)
    zone_trusted: bool | None = None
    if zone is not None and ctx.trusted_zones:
        zone_trusted = zone in ctx.trusted_zones

    is_external: bool | None
    if ctx.is_external_address(identifier):
        is_external = True
    elif zone is not None:
        is_external = False
    else:
        try:
            address = ipaddress.ip_address(identifier)
        except ValueError:
            is_external = None
        else:
            is_external = bool(address.is_global)

    return EntityClass(
        is_human=is_human,
        is_mobile=is_mobile,
        zone=zone,
        is_external=is_external,
        zone_trusted=zone_trusted,
    )


def _as_set(value, name: str) -> frozenset:
    if value is None:
        return frozenset()
    if not isinstance(value, list):
        raise ContextError(f"{name} must be a list")
    return frozenset(value)


def context_from_dict(data: dict) -> ContextSpec:
    """Build a :class:`ContextSpec` from its JSON object form."""
    if not isinstance(data, dict):
        raise ContextError("context file must contain a JSON object")

    comms = []
    for raw in data.get("expected_communications", []):
        if not isinstance(raw, dict) or not {"src", "dst", "protocol"} <= raw.keys():
            raise ContextError(f"expected_communications entry must have src/dst/protocol: {raw!r}")
        comms.append(
            CommEntry(
                src=str(raw["src"]),
                dst=str(raw["dst"]),
                protocol=str(raw["protocol"]),
                mandatory=bool(raw.get("mandatory", False)),
            )
        )

    processes = set()
    for raw in data.get("known_software_processes", []):
        if isinstance(raw, dict):
            processes.add((str(raw["process_id"]), str(raw["device_id"])))
        elif isinstance(raw, list) and len(raw) == 2:
            processes.add((str(raw[0]), str(raw[1])))
        else:
            raise ContextError(f"known_software_processes entry malformed: {raw!r}")

    rate_spec: dict[tuple[str, str], RateLimit] = {}
    for raw in data.get("rate_spec", []):
        pair = raw.get("pair")
        if not isinstance(pair, list) or len(pair) != 2:
            raise ContextError(f"rate_spec entry needs a two-element pair: {raw!r}")
        window_ms = raw.get("window_ms")
        if not isinstance(window_ms, int) or window_ms <= 0:
            raise ContextError(f"rate_spec window_ms must be a positive integer: {raw!r}")
        key = tuple(sorted((str(pair[0]), str(pair[1]))))
        rate_spec[key] = RateLimit(
            window_ms=window_ms,
            max_events_per_window=raw.get("max_events_per_window"),
            max_bytes_per_window=raw.get("max_bytes_per_window"),
        )

    password_policy = None
    if "password_policy" in data:
        raw = data["password_policy"]
        password_policy = PasswordPolicy(
            min_length=int(raw.get("min_length", 8)),
            max_lifetime_days=raw.get("max_lifetime_days"),
        )

    crypto_policy = None
    if "crypto_policy" in data:
        raw = data["crypto_policy"]
        crypto_policy = CryptoPolicy(
            approved_suites=_as_set(raw.get("approved_suites"), "approved_suites"),
            min_key_bits=int(raw.get("min_key_bits", 128)),
            min_protocol_versions=dict(raw.get("min_protocol_versions", {})),
        )

    kwargs = dict(
        expected_protocols=_as_set(data.get("expected_protocols"), "expected_protocols"),
        expected_communications=tuple(comms),
        expected_ports=frozenset(int(p) for p in data.get("expected_ports", [])),
        known_software_processes=frozenset(processes),
        human_identifiers=_as_set(data.get("human_identifiers"), "human_identifiers"),
        mobile_device_identifiers=_as_set(
            data.get("mobile_device_identifiers"), "mobile_device_identifiers"
        ),
        zone_map={str(k): str(v) for k, v in data.get("zone_map", {}).items()},
        zone_sl_target={str(k): int(v) for k, v in data.get("zone_sl_target", {}).items()},
        trusted_zones=_as_set(data.get("trusted_zones"), "trusted_zones"),
        control_zones=_as_set(data.get("control_zones"), "control_zones"),
        external_prefixes=tuple(data.get("external_prefixes", [])),
        rate_spec=rate_spec,
        password_policy=password_policy,
        max_failed_attempts=data.get("max_failed_attempts"),
        session_max_ms=int(data.get("session_max_ms", DEFAULT_SESSION_MAX_MS)),
        crypto_policy=crypto_policy,
        p2p_bandwidth_limit_bytes_per_s=data.get("p2p_bandwidth_limit_bytes_per_s"),
    )
    for name, default in (
        ("wireless_protocols", DEFAULT_WIRELESS_PROTOCOLS),
        ("p2p_protocols", DEFAULT_P2P_PROTOCOLS),
        ("iac_capable_protocols", DEFAULT_IAC_PROTOCOLS),
        ("x509_capable_protocols", DEFAULT_X509_PROTOCOLS),
        ("management_protocols", DEFAULT_MANAGEMENT_PROTOCOLS),
    ):
        kwargs[name] = _as_set(data[name], name) if name in data else default
    return ContextSpec(**kwargs)


def context_to_dict(ctx: ContextSpec) -> dict:
    """JSON object form of a :class:`ContextSpec` (inverse of ``context_from_dict``)."""
    data: dict = {
        "expected_protocols": sorted(ctx.expected_protocols),
        "expected_communications": [
            {
                "src": e.src,
                "dst": e.dst,
                "protocol": e.protocol,
                **({"mandatory": True} if e.mandatory else {}),
            }
            for e in ctx.expected_communications
        ],
        "expected_ports": sorted(ctx.expected_ports),
        "known_software_processes": [
            {"process_id": p, "device_id": d} for p, d in sorted(ctx.known_software_processes)
        ],
        "human_identifiers": sorted(ctx.human_identifiers),
        "mobile_device_identifiers": sorted(ctx.mobile_device_identifiers),
        "zone_map": dict(sorted(ctx.zone_map.items())),
        "zone_sl_target": dict(sorted(ctx.zone_sl_target.items())),
        "trusted_zones": sorted(ctx.trusted_zones),
        "control_zones": sorted(ctx.control_zones),
        "external_prefixes": list(ctx.external_prefixes),
        "wireless_protocols": sorted(ctx.wireless_protocols),
        "p2p_protocols": sorted(ctx.p2p_protocols),
        "iac_capable_protocols": sorted(ctx.iac_capable_protocols),
        "x509_capable_protocols": sorted(ctx.x509_capable_protocols),
        "management_protocols": sorted(ctx.management_protocols),
        "rate_spec": [
            {
                "pair": list(pair),
                "window_ms": limit.window_ms,
                **(
                    {"max_events_per_window": limit.max_events_per_window}
                    if limit.max_events_per_window is not None
                    else {}
                ),
                **(
                    {"max_bytes_per_window": limit.max_bytes_per_window}
                    if limit.max_bytes_per_window is not None
                    else {}
                ),
            }
            for pair, limit in sorted(ctx.rate_spec.items())
        ],
        "session_max_ms": ctx.session_max_ms,
    }
    if ctx.password_policy is not None:
        data["password_policy"] = {"min_length": ctx.password_policy.min_length}
        if ctx.password_policy.max_lifetime_days is not None:
            data["password_policy"]["max_lifetime_days"] = ctx.password_policy.max_lifetime_days
    if ctx.max_failed_attempts is not None:
        data["max_failed_attempts"] = ctx.max_failed_attempts
    if ctx.crypto_policy is not None:
        data["crypto_policy"] = {
            "approved_suites": sorted(ctx.crypto_policy.approved_suites),
            "min_key_bits": ctx.crypto_policy.min_key_bits,
            "min_protocol_versions": dict(sorted(ctx.crypto_policy.min_protocol_versions.items())),
        }
    if ctx.p2p_bandwidth_limit_bytes_per_s is not None:
        data["p2p_bandwidth_limit_bytes_per_s"] = ctx.p2p_bandwidth_limit_bytes_per_s
    return data


def load_context(path: str | Path) -> ContextSpec:
    """Load a context file, applying documented defaults for absent sections."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ContextError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return context_from_dict(data)


def load_manual_attributes(path: str | Path, catalog) -> ManualAttributeFile:
    """Load auditor-set manual attribute values, cross-checked against ``catalog``.

    An entry is accepted only when the catalog binds its attribute with kind
    manual. Entries for traffic/logical attributes are refused: monitored
    attributes cannot be overridden by hand.
    """
    from otcms.catalog import AttributeKind

    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ContextError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ContextError(f"{path}: manual attribute file must contain a JSON object")

    raw_entries = data.get("entries", data)
    if not isinstance(raw_entries, dict):
        raise ContextError(f"{path}: 'entries' must be a JSON object")

    kinds = catalog.attribute_kinds()
    entries: dict[str, ManualEntry] = {}
    for attribute_id, raw in raw_entries.items():
        kind = kinds.get(attribute_id)
        if kind is None:
            raise ContextError(f"unknown manual attribute {attribute_id!r}: not bound in the catalog")
        if kind is not AttributeKind.MANUAL:
            raise ContextError(
                f"manual override refused for {attribute_id!r}: attribute is monitored ({kind.value})"
            )
        if isinstance(raw, bool):
            entries[attribute_id] = ManualEntry(value=raw)
        elif isinstance(raw, dict) and isinstance(raw.get("value"), bool):
            entries[attribute_id] = ManualEntry(
                value=raw["value"],
                set_by=str(raw.get("set_by", "")),
                date=str(raw.get("date", "")),
                note=str(raw.get("note", "")),
            )
        else:
            raise ContextError(f"manual entry for {attribute_id!r} must carry a boolean value")
    return ManualAttributeFile(entries=entries)
