#!/usr/bin/env python3
"""Reference oracle for the key-derivation conformance vectors.

Written against hashlib only so it shares no code with the Rust crate.
Regenerate with:

    python3 crates/core/tests/oracle/gen_vectors.py > crates/core/tests/vectors/derivations.txt
"""
import hashlib
import random
import struct


def h(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def xor_left_padded(a: bytes, b: bytes) -> bytes:
    n = max(len(a), len(b))
    a = a.rjust(n, b"\x00")
    b = b.rjust(n, b"\x00")
    return bytes(x ^ y for x, y in zip(a, b))


def commitment(t: int, content_id: str) -> bytes:
    raw = content_id.encode("utf-8")
    return h(struct.pack(">Q", t) + struct.pack(">I", len(raw)) + raw)


def chain(zeta0: bytes, pk: bytes, length: int):
    gens, keys = [], []
    g = zeta0
    for _ in range(length):
        g = h(g)
        gens.append(g)
        keys.append(h(g + pk))
    return gens, keys


def rec(op, inputs, out):
    print(f"{op} {'|'.join(x.hex() for x in inputs)} → {out.hex()}")


def main():
    rng = random.Random(20240611)
    rb = lambda n: bytes(rng.getrandbits(8) for _ in range(n))

    print("# op input-hex[|input-hex...] → output-hex")
    print("# hash")
    for msg in [b"", b"abc", b"abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq"]:
        rec("hash", [msg], h(msg))

    print("# derive_commitment: time(be64)|content_id(utf8)")
    for t, cid in [(1700000000, "movie/v1"), (1700000000, "movie/v2"), (0, "/news/daily/2024-06-11"), (2**63, "é")]:
        rec("derive_commitment", [struct.pack(">Q", t), cid.encode()], commitment(t, cid))

    print("# key chain: zeta0|pk|k(be64) → generator_k / segment_key_k")
    zeta0 = h(b"fixed-commitment")
    pk = bytes(range(32))
    gens, keys = chain(zeta0, pk, 4)
    for k in range(1, 5):
        kk = struct.pack(">Q", k)
        rec("chain_generator", [zeta0, pk, kk], gens[k - 1])
        rec("chain_segment_key", [zeta0, pk, kk], keys[k - 1])
    for _ in range(24):
        z, p = rb(32), rb(32)
        length = rng.choice([1, 2, 17, 1000])
        gens, keys = chain(z, p, length)
        kk = struct.pack(">Q", length)
        rec("chain_generator", [z, p, kk], gens[-1])
        rec("chain_segment_key", [z, p, kk], keys[-1])

    print("# derive_subscription_key: pk|n_s")
    cases = [(pk, bytes(32)), (bytes(32), pk), (pk, rb(16)), (rb(32), rb(24)), (rb(5), rb(40))]
    for a, b in cases:
        rec("derive_subscription_key", [a, b], h(xor_left_padded(a, b)))

    print("# derive_session_key: t_m(be64)|n_s")
    for t, ns in [(1700000123, rb(16)), (1700000123, rb(32)), (0, rb(16)), (0x0102030405060708, bytes.fromhex("0102030405060708"))]:
        tb = struct.pack(">Q", t)
        rec("derive_session_key", [tb, ns], h(xor_left_padded(tb, ns)))

    print("# derive_temp_session_key: k_s|n_0")
    for ks, n0 in [(h(b"session"), bytes(16)), (h(b"session"), rb(16)), (rb(32), rb(16))]:
        rec("derive_temp_session_key", [ks, n0], h(xor_left_padded(ks, n0)))


if __name__ == "__main__":
    main()
