import math

import numpy as np
import pytest

from recoverability.errors import InvalidChannel, ShapeError
from recoverability.numerics import embed, kron, partial_trace, reduced, support_projector, permute_systems
from recoverability.quantum import (
    Ensemble,
    QuantumMap,
    channel_from_kraus,
    choi,
    computational_measurement,
    cq_state,
    dephasing_channel,
    identity_channel,
    measurement_channel,
    partial_trace_channel,
    random_channel,
    random_density,
    random_measurement,
    random_psd,
)
from recoverability.recovery import (
    RecoveryMap,
    RotatedPetzFamily,
    cmi_recovery,
    eb_map,
    local_petz_product,
    petz,
    pgm,
    pgm_elements,
    rotated_petz,
    rotation,
    sequential_recovery,
)

from conftest import trace_norm


def _choi_gap(a, b):
    a = a.base if isinstance(a, RecoveryMap) else a
    b = b.base if isinstance(b, RecoveryMap) else b
    return np.linalg.norm(choi(a) - choi(b), 2)


def test_petz_full_trace(rng):
    sigma = random_density(3, None, rng).matrix
    R = petz(sigma, partial_trace_channel([3], [0]))
    np.testing.assert_allclose(R(np.array([[0.7]])), 0.7 * sigma, atol=1e-12)


def test_petz_identity_is_support_projection(rng):
    sigma = random_psd(3, 2, rng).matrix
    P = support_projector(sigma)
    assert _choi_gap(petz(sigma, identity_channel(3)), QuantumMap(P[None])) <= 1e-10


@pytest.mark.parametrize("rank", [1, 2, 3])
def test_rotated_petz_recovers_sigma(rng, rank):
    sigma = random_psd(3, rank, rng).matrix
    ch = random_channel(3, 2, 3, rng)
    for t in (0.0, 0.7, -4.2):
        R = rotated_petz(sigma, ch, t)
        assert trace_norm(R(ch(sigma)) - sigma) <= 1e-9


def test_rotated_petz_t0_and_trivial_spectrum(rng):
    sigma = random_psd(3, 3, rng).matrix
    ch = random_channel(3, 3, 2, rng)
    assert _choi_gap(rotated_petz(sigma, ch, 0.0), petz(sigma, ch)) <= 1e-12
    mixed = np.eye(2) / 2
    ch2 = dephasing_channel(2)
    assert _choi_gap(rotated_petz(mixed, ch2, 0.0), rotated_petz(mixed, ch2, 3.3)) <= 1e-12


def test_rotated_petz_is_composition(rng):
    sigma = random_psd(3, 2, rng).matrix
    ch = random_channel(3, 2, 2, rng)
    t = 1.9
    composed = rotation(sigma, t).compose(petz(sigma, ch).base.compose(rotation(ch(sigma), -t)))
    assert _choi_gap(rotated_petz(sigma, ch, t), composed) <= 1e-10


def test_petz_requires_trace_preserving(rng):
    with pytest.raises(InvalidChannel):
        petz(np.eye(2), channel_from_kraus([0.5 * np.eye(2)]))


def test_rotation(rng):
    omega = random_psd(3, 2, rng).matrix
    U = rotation(omega, 0.0)
    np.testing.assert_allclose(U.kraus[0], support_projector(omega), atol=1e-12)
    assert np.linalg.norm(rotation(omega, 2.5)(omega) - omega, 2) <= 1e-12
    scalar = rotation(np.eye(2) / 2, 1.7).kraus[0]
    np.testing.assert_allclose(scalar, scalar[0, 0] * np.eye(2), atol=1e-14)
    back = rotation(omega, 1.3).compose(rotation(omega, -1.3))
    assert _choi_gap(back, QuantumMap(support_projector(omega)[None])) <= 1e-12


def test_family_matches_direct(rng):
    sigma = random_psd(4, 3, rng).matrix
    ch = random_channel(4, 2, 3, rng)
    fam = RotatedPetzFamily(sigma, ch)
    X = random_density(2, None, rng).matrix
    for t in (0.0, -2.0, 5.5):
        np.testing.assert_allclose(fam.output(t, X), rotated_petz(sigma, ch, t)(X), atol=1e-12)
        assert _choi_gap(fam.map(t), rotated_petz(sigma, ch, t)) <= 1e-12


def test_cmi_recovery_matches_rotated_petz(rng):
    dA, dB, dC = 2, 3, 2
    rho = random_density(dA * dB * dC, None, rng).matrix
    rac = reduced(rho, [dA, dB, dC], [0, 2])
    sigma = embed(rac, [dA, dB, dC], [0, 2])
    N = partial_trace_channel([dA, dB, dC], [0])
    for t in (0.0, 1.1):
        rec = cmi_recovery(rac, t, dims=(dA, dC))
        assert rec.in_dim == dC and rec.out_dim == dA * dC
        # (id_B (x) R) maps B C -> B A C; reorder outputs to A B C
        lifted = identity_channel(dB).tensor(rec.base).permuted([dB, dC], [0, 1], [dB, dA, dC], [1, 0, 2])
        assert _choi_gap(rotated_petz(sigma, N, t), lifted) <= 1e-9
        assert trace_norm(rec(reduced(rac, [dA, dC], [1])) - rac) <= 1e-9


def test_cmi_recovery_product_and_mixed(rng):
    ra, rc = random_density(2, None, rng).matrix, random_density(3, 3, rng).matrix
    rec = cmi_recovery(kron(ra, rc), 0.4, dims=(2, 3))
    X = random_density(3, None, rng).matrix
    np.testing.assert_allclose(rec(X), kron(ra, X), atol=1e-10)
    mixed = np.eye(4) / 4
    assert _choi_gap(cmi_recovery(mixed, 0.0, (2, 2)), cmi_recovery(mixed, 2.0, (2, 2))) <= 1e-12
    with pytest.raises(ShapeError):
        cmi_recovery(mixed, 0.0, (2, 2, 1))


def test_sequential_l2_collapses(rng):
    rho = random_density(8, None, rng).matrix
    t = 0.9
    seq = sequential_recovery(rho, t, dims=(2, 2, 2))
    single = cmi_recovery(reduced(rho, [2, 2, 2], [1, 2]), t, dims=(2, 2))
    assert _choi_gap(seq, identity_channel(2).tensor(single.base)) <= 1e-10


def test_sequential_product_state(rng):
    parts = [random_density(2, None, rng).matrix for _ in range(4)]
    rho = kron(*parts)
    seq = sequential_recovery(rho, 0.3, dims=(2, 2, 2, 2))
    start = reduced(rho, [2] * 4, [0, 3])
    assert trace_norm(seq(start) - rho) <= 1e-9


def test_sequential_markov_chain(rng):
    # A1 - C - A2 with C classical: each A_i depends on C only
    pc = np.array([0.3, 0.7])
    a1 = [random_density(2, None, rng).matrix for _ in pc]
    a2 = [random_density(2, None, rng).matrix for _ in pc]
    rho = sum(p * kron(a1[c], a2[c], np.diag(np.eye(2)[c])) for c, p in enumerate(pc))
    seq = sequential_recovery(rho, 0.0, dims=(2, 2, 2))
    out = seq(reduced(rho, [2, 2, 2], [0, 2]))
    from recoverability.entropy import fidelity

    assert fidelity(rho, out) == pytest.approx(1, abs=1e-8)


def test_sequential_needs_two_a_systems():
    with pytest.raises(ShapeError):
        sequential_recovery(np.eye(4) / 4, 0.0, dims=(2, 2))


def test_eb_map_examples(rng):
    m = computational_measurement(2)
    deph = dephasing_channel(2)
    assert _choi_gap(eb_map(np.eye(2) / 2, m), deph) <= 1e-12
    assert _choi_gap(eb_map(np.diag([0.3, 0.7]), m), deph) <= 1e-12
    rho = random_density(3, None, rng).matrix
    mm = random_measurement(3, 4, rng)
    assert abs(np.trace(eb_map(rho, mm)(rho)) - 1) <= 1e-12


@pytest.mark.parametrize("rank", [1, 2, 3])
def test_eb_map_is_petz_after_measurement(rng, rank):
    rho = random_density(3, rank, rng).matrix
    m = random_measurement(3, 4, rng)
    M = measurement_channel(m)
    assert _choi_gap(petz(rho, M).compose(M), eb_map(rho, m)) <= 1e-9


def test_eb_map_drops_zero_probability_outcomes():
    rho = np.diag([1.0, 0.0])
    E = eb_map(rho, computational_measurement(2))
    assert E.num_kraus == 1


def test_pgm_examples(rng):
    e0, e1 = np.diag([1.0, 0]), np.diag([0, 1.0])
    P = pgm(Ensemble([0.5, 0.5], [e0, e1]), 0.0)
    np.testing.assert_allclose(P(np.array([[0.3, 0.2], [0.2, 0.7]])), np.diag([0.3, 0.7]), atol=1e-12)
    s = random_psd(3, 2, rng).matrix
    E = pgm_elements(Ensemble([1.0], [s]), 0.0)
    np.testing.assert_allclose(E[0], support_projector(s), atol=1e-10)
    ens = Ensemble([0.2, 0.5, 0.3], [random_psd(3, r, rng) for r in (1, 2, 1)])
    for t in (0.0, 1.4):
        E = pgm_elements(ens, t)
        np.testing.assert_allclose(E.sum(axis=0), support_projector(ens.average()), atol=1e-10)


def test_pgm_is_traced_rotated_petz(rng):
    ens = Ensemble([0.4, 0.6], [random_psd(2, 2, rng), random_psd(2, 1, rng)])
    sigma_xb = np.asarray(cq_state(ens).matrix)
    for t in (0.0, -2.3):
        R = rotated_petz(sigma_xb, partial_trace_channel([2, 2], [0]), t)
        measured = partial_trace_channel([2, 2], [1]).compose(R.base)
        assert _choi_gap(measured, pgm(ens, t)) <= 1e-9


def test_local_petz_product(rng):
    dims = (2, 2, 2, 2)
    rho = random_density(16, None, rng).matrix
    pairs = [(0, 1), (2, 3)]
    sigma = kron(reduced(rho, dims, [0, 1]), reduced(rho, dims, [2, 3]))
    whole = rotated_petz(sigma, partial_trace_channel(dims, [0, 2]), 0.6)
    assert _choi_gap(whole, local_petz_product(rho, pairs, 0.6, dims)) <= 1e-9


def test_recovery_map_metadata(rng):
    R = rotated_petz(np.eye(2) / 2, dephasing_channel(2), 0.25)
    assert R.provenance == "rotated_petz" and R.t == 0.25
    with pytest.raises(ValueError):
        RecoveryMap(R.base, 0.0, "bogus")
