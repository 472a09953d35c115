"""Per-pixel boundary-interaction histogram, computed by scanning pixel ownership."""
import json
import sys

NAMES = {"II": "Int-Int", "EI": "Int-Edg", "CI": "Int-Cro", "EE": "Edg-Edg", "CE": "Edg-Cro", "CC": "Cro-Cro"}
ORDER = {"I": 0, "E": 1, "C": 2}


def owners(n, size):
    # pixel x belongs to cell i iff floor(i*size/n) <= x < floor((i+1)*size/n)
    own = []
    i = 0
    for x in range(size):
        while (i + 1) * size // n <= x:
            i += 1
        own.append(i)
    return own


def axis_classes(n, size, patch):
    own = owners(n, size)
    pixels = {}
    for x, i in enumerate(own):
        pixels.setdefault(i, []).append(x)
    out = []
    for i in range(n):
        xs = pixels[i]
        patches = {x // patch for x in xs}
        if len(patches) > 1:
            out.append("C")
        elif xs[0] % patch == 0 or (xs[-1] + 1) % patch == 0:
            out.append("E")
        else:
            out.append("I")
    return out


def histogram(n, size, patch):
    cls = axis_classes(n, size, patch)
    hist = {v: 0 for v in NAMES.values()}
    for a in cls:
        for b in cls:
            key = "".join(sorted((a, b), key=lambda k: -ORDER[k]))
            hist[NAMES[key]] += 1
    return hist


if __name__ == "__main__":
    cases = [(65, 512, 16), (47, 512, 16), (48, 512, 16), (62, 512, 16), (33, 448, 14)]
    out = [{"n": n, "image_size": s, "patch": p, "histogram": histogram(n, s, p)} for n, s, p in cases]
    json.dump({"cases": out}, sys.stdout, indent=1)
    sys.stdout.write("\n")
