import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gnjd.exceptions import DegenerateInputError, DimensionError
from gnjd.matrix import TargetSet, n_pairs, pair_list
from gnjd.metrics import (
    cost_split,
    gain_matrix,
    gnjd_cost,
    j_isi,
    oron,
    transform_targets,
    write_jisi_summary,
    write_oron_trace,
)
from gnjd.synth import gen_exact, gen_noisy

from oracles import diag_sq, jisi_reference, off_sq


def cgauss(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def test_cost_zero_at_true_inverse():
    targets, truth = gen_exact(5, 4, 3, seed=1)
    B = np.linalg.inv(truth.A)
    total = float(np.sum(np.abs(targets.data) ** 2))
    assert gnjd_cost(targets, B) <= 1e-18 * total
    assert oron(targets, B) < 1e-25


def test_cost_zero_for_diagonal_targets():
    data = np.zeros((3, 2, 3, 3), dtype=complex)
    data[..., range(3), range(3)] = 1 + 2j
    targets = TargetSet(data, 2)
    assert gnjd_cost(targets, np.stack([np.eye(3)] * 2)) == 0.0


def test_cost_matches_loop_oracle():
    targets, _ = gen_noisy(3, 2, 3, 5.0, seed=2)
    rng = np.random.default_rng(0)
    B = cgauss(rng, (3, 3, 3))
    expect = 0.0
    for r1, r2, k in targets.triples():
        expect += off_sq(B[r1] @ targets[r1, r2, k] @ B[r2].conj().T)
    assert gnjd_cost(targets, B) == pytest.approx(expect, rel=1e-12)


@given(st.integers(0, 2**31), st.integers(1, 4))
def test_cost_split_sums_to_total(seed, R):
    rng = np.random.default_rng(seed)
    targets = TargetSet(cgauss(rng, (n_pairs(R), 2, 3, 3)), R)
    B = cgauss(rng, (R, 3, 3))
    intra = sum(
        off_sq(B[r1] @ targets[r1, r2, k] @ B[r2].conj().T) for r1, r2, k in targets.triples() if r1 == r2
    )
    inter = sum(
        off_sq(B[r1] @ targets[r1, r2, k] @ B[r2].conj().T) for r1, r2, k in targets.triples() if r1 != r2
    )
    eta1, eta2 = cost_split(targets, B)
    assert eta1 == pytest.approx(intra, rel=1e-12, abs=1e-300)
    assert eta2 == pytest.approx(inter, rel=1e-12, abs=1e-300)
    assert eta1 + eta2 == pytest.approx(gnjd_cost(targets, B), rel=1e-12)


def test_cost_respects_active_triples():
    targets, _ = gen_noisy(3, 2, 2, 5.0, seed=3)
    B = np.stack([np.eye(3)] * 2)
    active = [(0, 1, 0), (0, 1, 1)]
    expect = off_sq(targets[0, 1, 0]) + off_sq(targets[0, 1, 1])
    assert gnjd_cost(targets, B, active) == pytest.approx(expect, rel=1e-12)
    num = expect
    den = diag_sq(targets[0, 1, 0]) + diag_sq(targets[0, 1, 1])
    assert oron(targets, B, active) == pytest.approx(num / den, rel=1e-12)


def test_transform_targets_shape_and_values():
    targets, _ = gen_exact(3, 2, 2, seed=0)
    B = cgauss(np.random.default_rng(1), (2, 3, 3))
    Y = transform_targets(targets, B)
    assert Y.shape == targets.data.shape
    for p, (r1, r2) in enumerate(pair_list(2)):
        np.testing.assert_allclose(Y[p, 1], B[r1] @ targets[r1, r2, 1] @ B[r2].conj().T)
    with pytest.raises(DimensionError):
        transform_targets(targets, B[:1])


def test_oron_examples():
    eye = np.eye(2)[None]
    assert oron(TargetSet(np.array([[[[0, 1], [1, 0]]]]), 1), eye) == float("inf")
    assert oron(TargetSet(np.array([[[[1, 1], [0, 1]]]]), 1), eye) == 0.5
    assert oron(TargetSet(np.zeros((1, 1, 2, 2)), 1), eye) == 0.0
    assert oron(TargetSet(np.array([[np.diag([1.0, 2.0])]]), 1), eye) == 0.0


@given(st.integers(0, 2**31))
def test_oron_invariant_under_k_permutation(seed):
    rng = np.random.default_rng(seed)
    R, K = 3, 5
    data = cgauss(rng, (n_pairs(R), K, 3, 3))
    B = cgauss(rng, (R, 3, 3))
    perm = rng.permutation(K)
    a = oron(TargetSet(data, R), B)
    b = oron(TargetSet(data[:, perm], R), B)
    assert a == pytest.approx(b, rel=1e-13)


# --- J-ISI -------------------------------------------------------------------

def test_jisi_identity_and_permutation():
    rng = np.random.default_rng(0)
    A = cgauss(rng, (3, 4, 4))
    assert j_isi(np.linalg.inv(A), A) == pytest.approx(0.0, abs=1e-12)
    P = np.eye(4)[[2, 0, 3, 1]]
    W = np.stack([P @ np.linalg.inv(a) for a in A])
    assert j_isi(W, A) == pytest.approx(0.0, abs=1e-12)


def test_jisi_misaligned_permutations_penalized():
    A = np.stack([np.eye(3)] * 2)
    W = np.stack([np.eye(3), np.eye(3)[[1, 2, 0]]])
    assert j_isi(W, A) > 0.1


def test_jisi_all_ones():
    W = np.ones((1, 2, 2))
    A = np.eye(2)[None]
    assert j_isi(W, A) == pytest.approx(1.0, rel=1e-15)
    np.testing.assert_allclose(gain_matrix(W, A), np.full((2, 2), 2**-0.5))


def test_jisi_matches_reference():
    rng = np.random.default_rng(7)
    W, A = cgauss(rng, (4, 5, 5)), cgauss(rng, (4, 5, 5))
    assert j_isi(W, A) == pytest.approx(jisi_reference(W, A), rel=1e-12)


@given(st.integers(0, 2**31), st.integers(2, 6), st.integers(1, 4))
def test_jisi_bounds(seed, N, R):
    rng = np.random.default_rng(seed)
    value = j_isi(cgauss(rng, (R, N, N)), cgauss(rng, (R, N, N)))
    assert 0.0 <= value <= 1.0 + 1e-12


@given(st.integers(0, 2**31))
def test_jisi_row_scaling_invariance(seed):
    rng = np.random.default_rng(seed)
    W, A = cgauss(rng, (3, 4, 4)), cgauss(rng, (3, 4, 4))
    scale = cgauss(rng, (3, 4, 1)) + 0.1
    assert j_isi(scale * W, A) == pytest.approx(j_isi(W, A), rel=1e-12, abs=1e-14)


@given(st.integers(0, 2**31))
def test_jisi_common_row_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    W, A = cgauss(rng, (3, 5, 5)), cgauss(rng, (3, 5, 5))
    perm = rng.permutation(5)
    assert j_isi(W[:, perm], A) == pytest.approx(j_isi(W, A), rel=1e-12)


@given(st.integers(0, 2**31), st.integers(2, 5))
def test_jisi_zero_on_shared_scaled_permutation(seed, N):
    rng = np.random.default_rng(seed)
    A = cgauss(rng, (3, N, N))
    P = np.eye(N)[rng.permutation(N)]
    W = np.stack([np.diag(cgauss(rng, N) + 0.5) @ P @ np.linalg.inv(a) for a in A])
    assert j_isi(W, A) < 1e-9


def test_jisi_degenerate_inputs():
    with pytest.raises(DegenerateInputError):
        j_isi(np.zeros((1, 2, 2)), np.eye(2)[None])
    with pytest.raises(DimensionError):
        j_isi(np.ones((2, 3, 3)), np.ones((1, 3, 3)))


def test_csv_writers(tmp_path):
    write_oron_trace(tmp_path / "o.csv", [0.5, 1 / 3], header="gnjd test seed=1")
    lines = (tmp_path / "o.csv").read_text().splitlines()
    assert lines[0] == "# gnjd test seed=1"
    assert lines[1] == "sweep,oron"
    assert float(lines[3].split(",")[1]) == 1 / 3
    write_jisi_summary(tmp_path / "j.csv", [(0.0, 0.1, 0.05, 0.2)])
    lines = (tmp_path / "j.csv").read_text().splitlines()
    assert lines[0] == "snr,median_jisi,q1,q3"
    assert [float(v) for v in lines[1].split(",")] == [0.0, 0.1, 0.05, 0.2]
