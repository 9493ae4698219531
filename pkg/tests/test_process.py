"""Geometric-grid simulation: determinism, support, moments, CSV export."""

import math

import numpy as np
import pytest

from qbm.process import (
    GeometricGrid,
    GeometricPath,
    PathBatch,
    default_depth,
    simulate_batch,
    simulate_path,
    write_batch_csv,
    write_path_csv,
)
from qbm.qcore import QContext


def test_grid_build():
    grid = GeometricGrid.build(q=0.5, t=2.0, depth=6)
    assert grid.K == 6
    assert len(grid) == 7
    for k in range(7):
        assert grid.times[k] == pytest.approx(2.0 * 0.5**k)


def test_grid_default_depth_is_minimal():
    # smallest K with q**K <= 1e-6
    for q in (0.2, 0.5, 0.8):
        K = default_depth(q)
        assert q**K <= 1e-6 < q ** (K - 1)
        assert GeometricGrid.build(q=q, t=1.0).K == K


def test_grid_validation():
    with pytest.raises(ValueError):
        GeometricGrid.build(q=1.2, t=1.0)
    with pytest.raises(ValueError):
        GeometricGrid.build(q=0.5, t=-1.0)
    with pytest.raises(ValueError):
        GeometricGrid.build(q=0.5, t=1.0, depth=0)


def test_path_length_mismatch_rejected():
    grid = GeometricGrid.build(q=0.5, t=1.0, depth=4)
    with pytest.raises(ValueError):
        GeometricPath(grid=grid, values=(0.0,) * 3)


def test_batch_deterministic_and_row_consistent():
    grid = GeometricGrid.build(q=0.5, t=1.0, depth=10)
    a = simulate_batch(grid, n_paths=8, base_seed=42)
    b = simulate_batch(grid, n_paths=8, base_seed=42)
    assert np.array_equal(a.values, b.values)
    # row i of a batch equals the standalone path with seed base + i
    for i in range(8):
        single = simulate_path(grid, seed=42 + i)
        assert np.array_equal(np.asarray(a.path(i).values), np.asarray(single.values))


def test_different_seeds_differ():
    grid = GeometricGrid.build(q=0.5, t=1.0, depth=10)
    a = simulate_batch(grid, n_paths=4, base_seed=1)
    b = simulate_batch(grid, n_paths=4, base_seed=2)
    assert not np.array_equal(a.values, b.values)


def test_paths_stay_in_support():
    for q in (0.3, 0.7):
        grid = GeometricGrid.build(q=q, t=1.5, depth=30)
        batch = simulate_batch(grid, n_paths=500, base_seed=5)
        for k in range(grid.K + 1):
            edge = 2.0 * math.sqrt(float(grid.times[k]) / (1.0 - q))
            assert np.all(np.abs(batch.values[:, k]) <= edge)
        for i in range(0, 500, 50):
            assert batch.path(i).in_support()


def test_horizon_moments_match_marginal():
    q, t, n = 0.5, 1.0, 40000
    grid = GeometricGrid.build(q=q, t=t)
    v = simulate_batch(grid, n_paths=n, base_seed=9).horizon_values
    # 4 sigma gates on mean, variance, fourth moment
    assert abs(np.mean(v)) <= 4.0 * np.std(v) / math.sqrt(n)
    v2 = v * v
    assert abs(np.mean(v2) - t) <= 4.0 * np.std(v2) / math.sqrt(n)
    v4 = v2 * v2
    assert abs(np.mean(v4) - (2 + q) * t * t) <= 4.0 * np.std(v4) / math.sqrt(n)


def test_increment_variance():
    q, n = 0.6, 40000
    grid = GeometricGrid.build(q=q, t=1.0)
    batch = simulate_batch(grid, n_paths=n, base_seed=13)
    inc = batch.values[:, 0] - batch.values[:, 2]
    gap = float(grid.times[0] - grid.times[2])
    d2 = inc * inc
    assert abs(np.mean(d2) - gap) <= 4.0 * np.std(d2) / math.sqrt(n)


def test_path_csv_format(tmp_path):
    grid = GeometricGrid.build(q=0.5, t=1.0, depth=5)
    path = simulate_path(grid, seed=7)
    dest = tmp_path / "p.csv"
    write_path_csv(path, str(dest))
    lines = dest.read_text().splitlines()
    assert lines[0] == "k,t_k,B_k"
    assert len(lines) == grid.K + 2
    k, tk, bk = lines[1].split(",")
    assert k == "0" and float(tk) == 1.0


def test_batch_csv_deterministic(tmp_path):
    grid = GeometricGrid.build(q=0.5, t=1.0, depth=5)
    batch = simulate_batch(grid, n_paths=3, base_seed=7)
    d1, d2 = tmp_path / "a", tmp_path / "b"
    names1 = write_batch_csv(batch, str(d1))
    names2 = write_batch_csv(batch, str(d2))
    assert names1 == names2
    for name in names1:
        assert (d1 / name).read_bytes() == (d2 / name).read_bytes()


def test_batch_csv_wide(tmp_path):
    grid = GeometricGrid.build(q=0.5, t=1.0, depth=4)
    batch = simulate_batch(grid, n_paths=3, base_seed=7)
    names = write_batch_csv(batch, str(tmp_path), wide=True)
    assert names == ["paths_wide.csv"]
    lines = (tmp_path / "paths_wide.csv").read_text().splitlines()
    assert lines[0] == "k,t_k,B_0,B_1,B_2"
    assert len(lines) == grid.K + 2


def test_batch_iteration():
    grid = GeometricGrid.build(q=0.5, t=1.0, depth=4)
    batch = simulate_batch(grid, n_paths=5, base_seed=3)
    assert len(batch) == 5
    assert len(list(batch)) == 5
    assert isinstance(next(iter(batch)), GeometricPath)
    assert isinstance(batch, PathBatch)


def test_explicit_ctx_matches_default():
    grid = GeometricGrid.build(q=0.5, t=1.0, depth=8)
    a = simulate_batch(grid, n_paths=4, base_seed=21)
    b = simulate_batch(grid, n_paths=4, base_seed=21, ctx=QContext.numeric(0.5))
    assert np.array_equal(a.values, b.values)
