"""Brute-force reference implementations used only by the tests.

Deliberately written as plain Python loops, sharing no code with the package.
"""


def naive_conv(w, v, S):
    """Six nested loops over (o, y, x, i, r, c); w and v are nested lists or arrays."""
    M, C, K = len(w), len(w[0]), len(w[0][0])
    H, W = len(v[0]), len(v[0][0])
    Ho, Wo = (H - K) // S + 1, (W - K) // S + 1
    out = [[[0 for _ in range(Wo)] for _ in range(Ho)] for _ in range(M)]
    for o in range(M):
        for y in range(Ho):
            for x in range(Wo):
                acc = 0
                for i in range(C):
                    for r in range(K):
                        for c in range(K):
                            acc += int(w[o][i][r][c]) * int(v[i][S * y + r][S * x + c])
                out[o][y][x] = acc
    return out


def naive_matvec(w, x):
    return [sum(int(a) * int(b) for a, b in zip(row, x)) for row in w]


def scan_encode(seq, bit):
    """Position-by-position encoder; returns a list of (rel, code) pairs."""
    limit = (1 << bit) - 1
    entries, gap = [], 0
    for value in seq:
        if value != 0:
            entries.append((gap, int(value)))
            gap = 0
        elif gap == limit:
            # this zero becomes the padding slot
            entries.append((limit, 0))
            gap = 0
        else:
            gap += 1
    return entries


def scan_decode(entries, length):
    out = [0] * length
    pos = -1
    for rel, code in entries:
        pos += rel + 1
        out[pos] = code
    return out


def count_runs(seq, want_zero=True):
    runs, current = {}, 0
    for value in list(seq) + [None]:
        inside = value is not None and ((value == 0) == want_zero)
        if inside:
            current += 1
        elif current:
            runs[current] = runs.get(current, 0) + 1
            current = 0
    return runs


def exhaustive_best_bit(zero_stat, nz, wbit, max_bit=16):
    best = None
    for bit in range(1, max_bit + 1):
        pads = sum(n * (i // (1 << bit)) for i, n in zero_stat.items())
        f = nz * bit + pads * (wbit + bit)
        if best is None or f < best[1]:
            best = (bit, f)
    return best


def column_major(w, m):
    """Flatten an m x C x K x K group in (chi, r, c, j) order."""
    C, K = len(w[0]), len(w[0][0])
    return [w[j][i][r][c] for i in range(C) for r in range(K) for c in range(K) for j in range(m)]
