"""Independent reference implementations the tests check against.

Everything here is deliberately naive (python loops, float64) and shares no
code with the package: brute-force forward propagation, finite differences,
exhaustive quantile scans, pairwise AUC, and tiny-image segmentation oracles.
"""

import numpy as np

BN_EPS = 1e-5


# -- naive float64 forward ----------------------------------------------

def naive_forward(net, x64):
    """Float64 re-implementation of the layer stack; returns the logits."""
    x = np.asarray(x64, dtype=np.float64)
    for i, layer in enumerate(net.layers):
        kind = layer.kind
        p = {k: v.astype(np.float64) for k, v in net.params[i].items()}
        if kind == "conv2d":
            x = _naive_conv(x, p["weight"], p["bias"], layer.stride, layer.padding)
        elif kind == "relu":
            x = np.maximum(x, 0.0)
        elif kind == "maxpool2x2":
            n, c, h, w = x.shape
            out = np.zeros((n, c, h // 2, w // 2))
            for a in range(h // 2):
                for b in range(w // 2):
                    out[:, :, a, b] = x[:, :, 2 * a:2 * a + 2, 2 * b:2 * b + 2].max(axis=(2, 3))
            x = out
        elif kind == "flatten":
            x = x.reshape(x.shape[0], -1)
        elif kind == "dense":
            x = x @ p["weight"] + p["bias"]
        elif kind == "batchnorm-inference":
            shape = (1, -1, 1, 1) if x.ndim == 4 else (1, -1)
            xhat = (x - p["mean"].reshape(shape)) / np.sqrt(p["var"].reshape(shape) + BN_EPS)
            x = p["gamma"].reshape(shape) * xhat + p["beta"].reshape(shape)
        elif kind == "softmax":
            return x  # logits are the softmax input
        else:
            raise AssertionError(f"oracle does not know layer kind {kind}")
    return x


def _naive_conv(x, w, b, stride, padding):
    n, c, h, wid = x.shape
    f, _, kh, kw = w.shape
    xp = np.zeros((n, c, h + 2 * padding, wid + 2 * padding))
    xp[:, :, padding:padding + h, padding:padding + wid] = x
    ho = (h + 2 * padding - kh) // stride + 1
    wo = (wid + 2 * padding - kw) // stride + 1
    out = np.zeros((n, f, ho, wo))
    for img in range(n):
        for fo in range(f):
            for i in range(ho):
                for j in range(wo):
                    patch = xp[img, :, i * stride:i * stride + kh, j * stride:j * stride + kw]
                    out[img, fo, i, j] = (patch * w[fo]).sum() + b[fo]
    return out


def naive_cross_entropy(logits, labels):
    z = logits - logits.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    return -logp[np.arange(len(labels)), labels]


def fd_input_gradient(net, x, labels, coords, h=1e-3):
    """Central differences of the summed cross-entropy on the float64 oracle."""
    out = {}
    for c in coords:
        xp = np.array(x, dtype=np.float64)
        xm = np.array(x, dtype=np.float64)
        xp[c] += h
        xm[c] -= h
        lp = naive_cross_entropy(naive_forward(net, xp), labels).sum()
        lm = naive_cross_entropy(naive_forward(net, xm), labels).sum()
        out[c] = (lp - lm) / (2 * h)
    return out


def fd_logit_gradient(net, x, class_index, coords, h=1e-3):
    out = {}
    for c in coords:
        xp = np.array(x, dtype=np.float64)
        xm = np.array(x, dtype=np.float64)
        xp[c] += h
        xm[c] -= h
        lp = naive_forward(net, xp)[:, class_index].sum()
        lm = naive_forward(net, xm)[:, class_index].sum()
        out[c] = (lp - lm) / (2 * h)
    return out


# -- order statistics ----------------------------------------------------

def quantile_scan(values, p):
    """Exhaustive scan: the smallest v with count(values <= v)/N >= p."""
    ordered = sorted(values)
    n = len(ordered)
    for v in ordered:
        if sum(1 for u in ordered if u <= v) / n >= p:
            return v
    return ordered[-1]


def iqr_scan(values):
    return quantile_scan(values, 0.75) - quantile_scan(values, 0.25)


# -- AUC -----------------------------------------------------------------

def pairwise_auc(scores, labels):
    """O(n^2) count of positive-over-negative wins, ties worth half."""
    pos = [s for s, l in zip(scores, labels) if l == 1]
    neg = [s for s, l in zip(scores, labels) if l == 0]
    wins = 0.0
    for sp in pos:
        for sn in neg:
            if sp > sn:
                wins += 1.0
            elif sp == sn:
                wins += 0.5
    return wins / (len(pos) * len(neg))


# -- segmentation oracles --------------------------------------------------

def felz_oracle(image, scale, min_size):
    """Pure-python graph merge on the explicit 8-connected edge list.

    No smoothing; the caller passes the already-smoothed image.
    """
    h, w, _ = image.shape
    n = h * w
    img = np.asarray(image, dtype=np.float64).reshape(n, 3)
    # index order within equal weights mirrors the production order:
    # right edges first, then down, then the two diagonals
    parent = list(range(n))
    size = [1] * n
    internal = [0.0] * n

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    edge_list = []
    for dy, dx in ((0, 1), (1, 0), (1, 1), (1, -1)):
        for y in range(h):
            for x in range(w):
                yy, xx = y + dy, x + dx
                if 0 <= yy < h and 0 <= xx < w:
                    a, b = y * w + x, yy * w + xx
                    edge_list.append((float(np.sqrt(((img[a] - img[b]) ** 2).sum())), a, b))
    order = sorted(range(len(edge_list)), key=lambda i: (edge_list[i][0], i))

    def union(ra, rb, weight):
        if size[ra] < size[rb]:
            ra, rb = rb, ra
        parent[rb] = ra
        size[ra] += size[rb]
        internal[ra] = weight

    for i in order:
        wgt, a, b = edge_list[i]
        ra, rb = find(a), find(b)
        if ra == rb:
            continue
        ta = internal[ra] + scale / size[ra]
        tb = internal[rb] + scale / size[rb]
        if wgt <= ta and wgt <= tb:
            union(ra, rb, wgt)
    for i in order:
        _, a, b = edge_list[i]
        ra, rb = find(a), find(b)
        if ra != rb and (size[ra] < min_size or size[rb] < min_size):
            if size[ra] < size[rb]:
                ra, rb = rb, ra
            parent[rb] = ra
            size[ra] += size[rb]
    roots = [find(i) for i in range(n)]
    remap = {}
    for r in sorted(set(roots)):
        remap[r] = len(remap)
    return np.array([remap[r] for r in roots]).reshape(h, w)


def quickshift_oracle(color5d, max_dist, kernel_size):
    """Brute-force density + linking over every pixel pair of a tiny image.

    color5d: (h, w, 3) feature colors already in the production color space.
    Returns root labels (not contiguously relabeled).
    """
    h, w, _ = color5d.shape
    n = h * w
    feats = []
    for y in range(h):
        for x in range(w):
            feats.append(np.array([*color5d[y, x], 0, 0], dtype=np.float64))
            feats[-1][3], feats[-1][4] = y, x
    radius = int(np.ceil(3.0 * kernel_size))
    density = []
    for i in range(n):
        d = 0.0
        for j in range(n):
            dy = feats[i][3] - feats[j][3]
            dx = feats[i][4] - feats[j][4]
            if dy * dy + dx * dx > radius * radius:
                continue
            dist2 = ((feats[i] - feats[j]) ** 2).sum()
            d += np.exp(-dist2 / (2 * kernel_size * kernel_size))
        density.append(d)
    parent = list(range(n))
    for i in range(n):
        best = None
        for j in range(n):
            if density[j] <= density[i]:
                continue
            dist2 = ((feats[i] - feats[j]) ** 2).sum()
            if dist2 > max_dist * max_dist:
                continue
            if best is None or dist2 < best[0] or (dist2 == best[0] and j < best[1]):
                best = (dist2, j)
        if best is not None:
            parent[i] = best[1]
    def find(i):
        seen = set()
        while parent[i] != i:
            assert i not in seen
            seen.add(i)
            i = parent[i]
        return i
    return np.array([find(i) for i in range(n)]).reshape(h, w)


def direct_gaussian(image, sigma):
    """O(n^2) 2-D convolution with an explicitly reflected border."""
    radius = int(np.ceil(3.0 * sigma))
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    k1 = np.exp(-(xs * xs) / (2.0 * sigma * sigma))
    k1 /= k1.sum()
    kernel = np.outer(k1, k1)
    h, w = image.shape[:2]

    def reflect(i, size):
        # mirror without repeating the edge sample
        if size == 1:
            return 0
        period = 2 * (size - 1)
        i = i % period
        if i < 0:
            i += period
        return i if i < size else period - i

    out = np.zeros_like(np.asarray(image, dtype=np.float64))
    for y in range(h):
        for x in range(w):
            acc = np.zeros(image.shape[2])
            for dy in range(-radius, radius + 1):
                for dx in range(-radius, radius + 1):
                    yy = reflect(y + dy, h)
                    xx = reflect(x + dx, w)
                    acc += kernel[dy + radius, dx + radius] * np.asarray(image, dtype=np.float64)[yy, xx]
            out[y, x] = acc
    return out
