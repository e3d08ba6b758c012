from __future__ import annotations

import pytest

from otcms.catalog import default_catalog_path, load_catalog
from otcms.evidence import EvidenceEvent, IdScheme


@pytest.fixture(scope="session")
def catalog():
    return load_catalog(default_catalog_path())


def ev(
    seq: int = 0,
    t: int = 0,
    src: str = "10.0.0.1",
    dst: str = "10.0.0.2",
    protocol: str = "MQTT",
    scheme_src: IdScheme = IdScheme.IP,
    scheme_dst: IdScheme = IdScheme.IP,
    **kw,
) -> EvidenceEvent:
    """Shorthand event builder for detector tests."""
    return EvidenceEvent(
        seq=seq,
        timestamp=t,
        src_id=src,
        dst_id=dst,
        protocol=protocol,
        id_scheme_src=scheme_src,
        id_scheme_dst=scheme_dst,
        **kw,
    )
