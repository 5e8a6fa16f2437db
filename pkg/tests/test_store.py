import pytest

from isofree.store import SeenStore, StoreCapExceeded


def test_fresh_key_is_new():
    assert SeenStore().insert_if_new(b"\x01\x02")


def test_repeat_key_is_old():
    store = SeenStore()
    store.insert_if_new(b"abc")
    assert not store.insert_if_new(b"abc")
    assert b"abc" in store and len(store) == 1


def test_one_byte_difference():
    store = SeenStore()
    assert store.insert_if_new(b"abc")
    assert store.insert_if_new(b"abd")
    assert store.stats() == (2, 6)


@pytest.mark.parametrize("fingerprint", [False, True])
def test_cap(fingerprint):
    store = SeenStore(fingerprint=fingerprint, cap_bytes=40)
    store.insert_if_new(b"x" * 20)
    store.insert_if_new(b"x" * 20)  # a repeat costs nothing
    with pytest.raises(StoreCapExceeded):
        for i in range(3):
            store.insert_if_new(bytes([i]) * 20)


def test_fingerprint_mode():
    store = SeenStore(fingerprint=True)
    key = bytes(range(200))
    assert store.insert_if_new(key)
    assert not store.insert_if_new(key)
    assert key in store
    assert store.stats() == (1, SeenStore.DIGEST_SIZE)


def test_collision_bound():
    assert SeenStore.collision_bound(10 ** 9) < 1e-20
