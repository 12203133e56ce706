import random
from pathlib import Path

import pytest

from nptp.cost import CommModel, DeviceProfile
from nptp.model import LayerConfig, NetworkConfig
from nptp.partition import (CutStep, EmptyRemaining, PartitionScheme, Rect,
                            guillotine_scheme)
from nptp.scenario import MpaConfig, Scenario

ROOT = Path(__file__).resolve().parent.parent
SCENARIOS = ROOT / "scenarios"
GOLDEN = Path(__file__).resolve().parent / "golden"

ACCEPTANCE_RESULTS = []


@pytest.fixture
def scenario_dir():
    return SCENARIOS


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num, ok, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(
            f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}")


# --- element-level reference for halo volumes -------------------------------
# Works on explicit sets of feature-map coordinates. An element of a layer's
# feature map belongs to whichever tile holds the last image pixel of its
# downsample block (clamped to the image), which is the same ownership as
# flooring tile boundaries.

def brute_dims(net, h, w):
    dims = []
    for l in net.layers:
        ho = (h + 2 * l.p - l.k_h) // l.s + 1 if h + 2 * l.p >= l.k_h else 0
        wo = (w + 2 * l.p - l.k_w) // l.s + 1 if w + 2 * l.p >= l.k_w else 0
        dims.append(((h, w), (ho, wo)))
        h, w = ho, wo
    return dims


def brute_owner(scheme, r, c, ds):
    py = min((r + 1) * ds - 1, scheme.image_h - 1)
    px = min((c + 1) * ds - 1, scheme.image_w - 1)
    for dev, t in scheme.assignments:
        if t.y <= py < t.y + t.h and t.x <= px < t.x + t.w:
            return dev
    raise AssertionError(f"pixel {(py, px)} not covered")


def brute_sets(scheme, net, layer_index):
    """(needed, owned_in, owner_map) element sets per device at one layer."""
    dims = brute_dims(net, scheme.image_h, scheme.image_w)
    layer = net.layers[layer_index]
    (hin, win), (hout, wout) = dims[layer_index]
    ds_in = 1
    for l in net.layers[:layer_index]:
        ds_in *= l.s
    ds_out = ds_in * layer.s
    owner_in = {(r, c): brute_owner(scheme, r, c, ds_in)
                for r in range(hin) for c in range(win)}
    needed = {d: set() for d in scheme.device_ids}
    for r in range(hout):
        for c in range(wout):
            dev = brute_owner(scheme, r, c, ds_out)
            for i in range(r * layer.s - layer.p, r * layer.s - layer.p + layer.k_h):
                for j in range(c * layer.s - layer.p, c * layer.s - layer.p + layer.k_w):
                    if 0 <= i < hin and 0 <= j < win:
                        needed[dev].add((i, j))
    owned = {d: {e for e, o in owner_in.items() if o == d} for d in scheme.device_ids}
    return needed, owned, owner_in


def brute_comm(scheme, net, layer_index, bpe=1):
    """Fetched bytes per device at a 0-based layer by set enumeration."""
    needed, owned, _ = brute_sets(scheme, net, layer_index)
    c_in = net.layers[layer_index].c_in
    return {d: len(needed[d] - owned[d]) * c_in * bpe for d in scheme.device_ids}


# --- random small instances --------------------------------------------------

def random_scheme(rng, h, w, ids):
    if len(ids) > 1 and rng.random() < 0.3 and h >= len(ids):
        cuts = sorted(rng.sample(range(1, h), len(ids) - 1))
        bounds = [0] + cuts + [h]
        tiles = tuple((d, Rect(0, bounds[i], w, bounds[i + 1] - bounds[i]))
                      for i, d in enumerate(ids))
        return PartitionScheme(h, w, tiles)
    while True:
        cuts = [CutStep(rng.choice("hv"), rng.uniform(0.05, 0.95))
                for _ in ids[1:]]
        try:
            return guillotine_scheme(h, w, ids, cuts)
        except EmptyRemaining:
            continue


def random_instance(seed, max_layers=2):
    """A network plus scheme on an image of at most 16x16."""
    rng = random.Random(seed)
    while True:
        h, w = rng.randint(3, 16), rng.randint(3, 16)
        layers = []
        c = rng.randint(1, 3)
        for _ in range(rng.randint(1, max_layers)):
            k = rng.choice([1, 2, 3, 5])
            s = rng.choice([1, 2])
            p = rng.randint(0, k // 2)
            if rng.random() < 0.2 and k == s:
                layers.append(LayerConfig("pool", c, c, k, k, s, p))
            else:
                c2 = rng.randint(1, 3)
                layers.append(LayerConfig("conv", c, c2, k, k, s, p))
                c = c2
        net = NetworkConfig("rand", tuple(layers))
        dims = brute_dims(net, h, w)
        if all(ho > 0 and wo > 0 for _, (ho, wo) in dims):
            break
    ids = [f"d{i}" for i in range(rng.randint(1, 3))]
    return net, random_scheme(rng, h, w, ids)


def tiny_scenario(i):
    """Small heterogeneous scenario used by the optimizer-vs-oracle checks."""
    rng = random.Random(1000 + i)
    n = rng.choice([2, 3])
    h, w = rng.randint(10, 16), rng.randint(10, 16)
    c = rng.randint(1, 4)
    layers = [LayerConfig.conv(1, c, 3, 1, 1)]
    if rng.random() < 0.5:
        layers.append(LayerConfig.conv(c, c, rng.choice([1, 3]), 1,
                                       rng.choice([0, 1])))
    net = NetworkConfig(f"tiny{i}", tuple(layers))
    devs = tuple(DeviceProfile(f"d{j}", rng.uniform(1, 4) * 1e3, 1e9,
                               rng.uniform(0.5, 20) * 1e3) for j in range(n))
    return Scenario(h, w, net, devs, CommModel("exact", 4), MpaConfig(), 0)
