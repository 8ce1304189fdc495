"""Frequency-ranked English words from wordfreq's bundled "large" list.

Uses wordfreq.top_n_list when wordfreq imports cleanly. wordfreq needs
msgpack, so when that is missing the bundled cBpack file is read directly
with a minimal MessagePack decoder covering the types it contains.
"""
import gzip
import os
import struct


def _decode(b, i):
    t = b[i]
    if t <= 0x7f:
        return t, i + 1
    if 0x80 <= t <= 0x8f:
        m, i = {}, i + 1
        for _ in range(t & 0x0f):
            k, i = _decode(b, i)
            m[k], i = _decode(b, i)
        return m, i
    if 0x90 <= t <= 0x9f:
        return _decode_array(b, i + 1, t & 0x0f)
    if 0xa0 <= t <= 0xbf:
        n = t & 0x1f
        return b[i + 1:i + 1 + n].decode(), i + 1 + n
    if t == 0xcc:
        return b[i + 1], i + 2
    if t == 0xd9:
        n = b[i + 1]
        return b[i + 2:i + 2 + n].decode(), i + 2 + n
    if t == 0xda:
        n = struct.unpack('>H', b[i + 1:i + 3])[0]
        return b[i + 3:i + 3 + n].decode(), i + 3 + n
    if t == 0xdc:
        return _decode_array(b, i + 3, struct.unpack('>H', b[i + 1:i + 3])[0])
    if t == 0xdd:
        return _decode_array(b, i + 5, struct.unpack('>I', b[i + 1:i + 5])[0])
    raise ValueError(f'unsupported msgpack type 0x{t:02x}')


def _decode_array(b, i, n):
    a = []
    for _ in range(n):
        v, i = _decode(b, i)
        a.append(v)
    return a, i


def top_words(n):
    try:
        import wordfreq
        return wordfreq.top_n_list('en', n, wordlist='large')
    except ImportError:
        pass
    import importlib.util
    spec = importlib.util.find_spec('wordfreq')
    if spec is None:
        raise ImportError('wordfreq is not installed')
    path = os.path.join(os.path.dirname(spec.origin), 'data', 'large_en.msgpack.gz')
    with gzip.open(path) as fh:
        cbpack, _ = _decode(fh.read(), 0)
    out = []
    for bucket in cbpack[1:]:  # first element is the format header
        for w in bucket:
            out.append(w)
            if len(out) >= n:
                return out
    return out


if __name__ == '__main__':
    print(top_words(60))
