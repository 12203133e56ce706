import pytest

from conftest import random_instance
from nptp.cost import CommModel, DeviceProfile, UnknownDevice, evaluate
from nptp.model import LayerConfig, NetworkConfig, vgg_preset
from nptp.partition import CutStep, PartitionScheme, Rect, guillotine_scheme
from nptp.sim import (InfeasibleScheme, aggregation_cost, simulate)

TWO = NetworkConfig("two", (LayerConfig.conv(1, 1, 3, 1, 1),
                            LayerConfig.conv(1, 1, 3, 1, 1)))


def test_single_device_timeline():
    net = vgg_preset("vgg11")
    s = PartitionScheme(64, 64, (("a", Rect(0, 0, 64, 64)),))
    devs = [DeviceProfile("a", 1e9, 1e9, 1e3)]
    tl = simulate(s, net, devs)
    assert len(tl.events) == 2 * len(net.layers)
    assert all(e.end_s == e.start_s for e in tl.events if e.phase == "exchange")
    assert tl.simulated_makespan_s == pytest.approx(evaluate(s, net, devs).makespan_s, rel=1e-12)


@pytest.mark.parametrize("seed", range(30))
def test_no_barrier_matches_analytic(seed):
    net, s = random_instance(seed, max_layers=3)
    devs = [DeviceProfile(d, 10.0 + i, 1e12, 3.0 + 2 * i) for i, d in enumerate(s.device_ids)]
    bd = evaluate(s, net, devs)
    if not bd.feasible:
        with pytest.raises(InfeasibleScheme):
            simulate(s, net, devs)
        return
    free = simulate(s, net, devs, barrier="none")
    sync = simulate(s, net, devs, barrier="per_layer")
    assert free.simulated_makespan_s == pytest.approx(bd.makespan_s, rel=1e-9)
    assert sync.simulated_makespan_s >= free.simulated_makespan_s * (1 - 1e-12)
    assert len(free.events) == len(devs) * len(net.layers) * 2


def test_barrier_makes_fast_device_wait():
    # layer 1 (3x3, one row of halo each) is link-bound on a, layer 2 (1x1,
    # 64 channels) is compute-bound on b
    s = PartitionScheme(8, 8, (("a", Rect(0, 0, 8, 4)), ("b", Rect(0, 4, 8, 4))))
    net = NetworkConfig("alt", (LayerConfig.conv(1, 1, 3, 1, 1),
                                LayerConfig.conv(1, 64, 1, 1, 0)))
    devs = [DeviceProfile("a", 2048.0, 1e9, 1.0),
            DeviceProfile("b", 256.0, 1e9, 2.0 ** 40)]
    bd = evaluate(s, net, devs, CommModel("exact", 1))
    assert bd.per_device["a"].per_layer_comm_volume == [8, 0]
    assert bd.per_device["a"].per_layer_compute == [288, 2048]
    # a: 8 + 288/2048 + 1 ; b: 8/2^40 + 288/256 + 2048/256
    assert bd.makespan_s == pytest.approx(9.140625, rel=1e-12)
    free = simulate(s, net, devs, CommModel("exact", 1), barrier="none")
    sync = simulate(s, net, devs, CommModel("exact", 1), barrier="per_layer")
    assert free.simulated_makespan_s == pytest.approx(9.140625, rel=1e-12)
    assert sync.simulated_makespan_s == pytest.approx(8.140625 + 8.0, rel=1e-12)
    b_layer2 = [e for e in sync.events if e.device_id == "b" and e.layer_index == 2]
    assert b_layer2[0].start_s == pytest.approx(8.140625)


def test_infeasible_rejected():
    s = PartitionScheme(8, 8, (("a", Rect(0, 0, 8, 8)),))
    with pytest.raises(InfeasibleScheme):
        simulate(s, TWO, [DeviceProfile("a", 1, 1, 1)])


def test_aggregation_examples():
    net = vgg_preset("vgg16")
    s = PartitionScheme(224, 448, (("a", Rect(0, 0, 224, 224)), ("b", Rect(224, 0, 224, 224))))
    devs = [DeviceProfile("a", 1, 1, 1e6), DeviceProfile("b", 1, 1, 2e6)]
    assert aggregation_cost(s, net, devs, "b") == 7 * 7 * 512 * 4 / 1e6
    assert aggregation_cost(s, net, devs, "a") == 7 * 7 * 512 * 4 / 2e6
    faster = [DeviceProfile("a", 1, 1, 2e6), DeviceProfile("b", 1, 1, 4e6)]
    assert aggregation_cost(s, net, faster, "a") == aggregation_cost(s, net, devs, "a") / 2
    whole = PartitionScheme(32, 32, (("a", Rect(0, 0, 32, 32)),))
    assert aggregation_cost(whole, net, devs, "a") == 0
    with pytest.raises(UnknownDevice):
        aggregation_cost(s, net, devs, "z")


def test_timeline_csv():
    s = guillotine_scheme(8, 8, "ab", [CutStep("h", 0.5)])
    devs = [DeviceProfile(x, 1e3, 1e9, 1e2) for x in "ab"]
    text = simulate(s, TWO, devs, CommModel()).to_csv()
    lines = text.splitlines()
    assert lines[0] == "device,layer,phase,start_s,end_s"
    assert len(lines) == 1 + 2 * 2 * 2
    assert lines[1].startswith("a,1,exchange,0.0,")
