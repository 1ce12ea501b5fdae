import pytest

import hysctl


def test_version():
    assert hysctl.__version__ == "1.0.0"


def test_play_sawtooth():
    out = hysctl.play_apply([(0, 0), (1, 2), (2, 0), (3, 2)], w0=0.0, rho=1.0)
    assert out[0] == (0.0, 0.0)
    assert out[-1][1] == pytest.approx(1.0)
    assert hysctl.play_update(1.0, 0.0, 3.0) == pytest.approx(2.0)


def test_inadmissible_seed_raises():
    with pytest.raises(ValueError):
        hysctl.play_apply([(0, 0), (1, 1)], w0=1.0, rho=0.1)
    with pytest.raises(hysctl.DomainError):
        hysctl.truncated_play_apply([(0, 0), (1, 1)], w0=3.0)


def test_bank_sweep_events():
    r = hysctl.bank_apply([(0, -1.5), (3, 1.5)], k=4)
    times = [e[0] for e in r["events"]]
    assert times == pytest.approx([1.75, 2.0, 2.25, 2.5])
    assert r["final_outputs"] == [1, 1, 1, 1]
    assert r["values"][-1] == pytest.approx(1.0)


def test_bank_tracks_truncated_play():
    u = [(0, -1.5), (1, 1.2), (2, -0.3), (3, 0.8)]
    tp = hysctl.truncated_play_apply(u, -1.0)
    for k in (4, 16, 64):
        r = hysctl.bank_apply(u, k=k)
        ts, vs = r["times"], r["values"]
        for t, w in tp:
            i = max(n for n in range(len(vs)) if ts[n] <= t)
            assert abs(vs[i] - w) <= 2.0 / k + 1e-12


def test_ramp_construction_reaches_target():
    times, values = [0, 1, 2, 3, 4], [1.0, -1.0, 0.5, 2.0]
    uk = hysctl.build_uk(times, values, w0=0.5, k=10)
    vk = hysctl.build_vk(times, values, w0=0.5, rho=0.2, k=10)
    w = hysctl.play_apply(vk, w0=0.5, rho=0.2)
    assert hysctl.sup_distance(w, uk) < 1e-10


def test_run_experiment():
    assert "thm2_convergence" in hysctl.experiment_ids()
    assert hysctl.default_params("fig5_density")["j"] == [10, 20, 40]
    rep = hysctl.run_experiment("fig3_surjectivity")
    assert rep["verdict"] == "pass"
    assert rep["params"]["k"] == [10, 20, 40]
    rep = hysctl.run_experiment("bank_vs_truncated", k=[4], cases=5)
    assert rep["params"]["k"] == [4]
    with pytest.raises(KeyError):
        hysctl.run_experiment("nope")
