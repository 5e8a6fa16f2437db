"""Set of canonical keys seen during one search."""

from __future__ import annotations

import hashlib


class StoreCapExceeded(RuntimeError):
    pass


class SeenStore:
    """Exact key set by default; ``fingerprint=True`` keeps 128-bit digests.

    Fingerprints cut memory to 16 bytes per key at the price of a collision
    probability of at most k**2 / 2**129 for k keys; a collision silently
    merges two isomorphism classes, so the mode is opt-in.
    """

    DIGEST_SIZE = 16

    def __init__(self, fingerprint: bool = False, cap_bytes: int | None = None):
        self.fingerprint = fingerprint
        self.cap_bytes = cap_bytes
        self._keys: set[bytes] = set()
        self._bytes = 0
        self.inserts = 0

    def insert_if_new(self, key: bytes) -> bool:
        if self.fingerprint:
            key = hashlib.blake2b(key, digest_size=self.DIGEST_SIZE).digest()
        if key in self._keys:
            return False
        if self.cap_bytes is not None and self._bytes + len(key) > self.cap_bytes:
            raise StoreCapExceeded(
                f"seen-key store would exceed {self.cap_bytes} bytes "
                f"after {len(self._keys)} keys")
        self._keys.add(key)
        self._bytes += len(key)
        self.inserts += 1
        return True

    def __contains__(self, key: bytes) -> bool:
        if self.fingerprint:
            key = hashlib.blake2b(key, digest_size=self.DIGEST_SIZE).digest()
        return key in self._keys

    def __len__(self) -> int:
        return len(self._keys)

    def stats(self) -> tuple[int, int]:
        """(distinct keys, bytes of key material retained)."""
        return len(self._keys), self._bytes

    @staticmethod
    def collision_bound(k: int) -> float:
        return k * k / 2.0 ** 129
