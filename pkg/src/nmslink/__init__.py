"""Indexed links of non-singular Morse-Smale flows on graph manifolds."""
from .decide import enumerate_links, is_realizable, realize
from .frh import FrhCertificate, verify_certificate
from .link import IndexedLink, KnotRecord, is_jsj_related
from .manifold import GraphManifold, is_ordinary, make_manifold, validate_manifold
from .seifert import SeifertPiece, Slope

__all__ = [
    "GraphManifold", "IndexedLink", "KnotRecord", "SeifertPiece", "Slope", "FrhCertificate",
    "make_manifold", "validate_manifold", "is_ordinary", "is_jsj_related", "realize",
    "verify_certificate", "is_realizable", "enumerate_links",
]
