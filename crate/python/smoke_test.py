"""Smoke test for the brlab Python bindings.

Build and install first:  pip install --no-build-isolation ./crates/python
"""

import math

import brlab_py as br


def close(a, b, rel):
    return abs(a - b) <= rel * max(abs(a), abs(b))


def main():
    grid = br.GridSpec(8, (1.0, 1.0, 1.0))
    params = br.KasnerParams.axisymmetric()
    state = br.kasner_initial_data(params, -1.0, grid)
    exact = br.oracle(params, -1.0)

    assert close(state.br_energy(), exact["br_energy"], 1e-10)
    assert close(state.br_flux(), exact["br_energy_rate"], 1e-10)
    assert len(state.metric()) == 8 ** 3

    h, m = state.constraint_norms()
    assert h < 1e-10 and m < 1e-10

    r = 3.0
    big = br.rescale(state, r)
    assert close(big.br_energy(), r * state.br_energy(), 1e-10)
    assert close(big.br_flux(), state.br_flux(), 1e-10)
    assert big.lapse() == state.lapse()

    dt = 0.01
    assert dt <= br.stable_dt(state, 0.5)
    later = br.time_step(state, dt)
    assert math.isclose(later.t, -0.99, rel_tol=0, abs_tol=1e-14)
    assert close(later.br_energy(), br.oracle(params, -0.99)["br_energy"], 1e-8)

    try:
        br.KasnerParams(1.0, 1.0, 1.0)
    except br.BrlabError as e:
        assert "InvalidKasner" in str(e)
    else:
        raise AssertionError("invalid Kasner exponents were accepted")

    passed, out = br.run_config("command = oracle\noracle_times = -1, -0.5\n")
    assert passed and out.count("\n") >= 3

    print("smoke test passed:", state, "E_BR =", state.br_energy())


if __name__ == "__main__":
    main()
