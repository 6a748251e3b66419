//! Sparse kernels checked against dense reference computations.

use hvac_core::sparse::{lu_solve, ColumnOrdering, CsrMatrix, LuFactorization, Triplets};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dense_accumulate(n: usize, m: usize, entries: &[(usize, usize, f64)]) -> Vec<Vec<f64>> {
    let mut d = vec![vec![0.0; m]; n];
    for &(r, c, v) in entries {
        d[r][c] += v;
    }
    d
}

fn dense_matvec(d: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    d.iter()
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

/// Gaussian elimination with partial pivoting on a dense copy.
fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i][k].abs().partial_cmp(&a[j][k].abs()).unwrap())
            .unwrap();
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    x
}

fn random_triplets(rng: &mut ChaCha8Rng, n: usize, m: usize, count: usize) -> Triplets {
    let mut t = Triplets::new(n, m);
    for _ in 0..count {
        t.push(rng.gen_range(0..n), rng.gen_range(0..m), rng.gen_range(-1.0..1.0));
    }
    t
}

/// Sparse, diagonally dominant, unsymmetric: a band plus a few long-range
/// couplings so the ordering matters.
fn diag_dominant(rng: &mut ChaCha8Rng, n: usize) -> CsrMatrix {
    let mut t = Triplets::new(n, n);
    let mut rowsum = vec![0.0; n];
    for i in 0..n {
        for _ in 0..4 {
            let off: i64 = rng.gen_range(-6..=6);
            let j = (i as i64 + off).clamp(0, n as i64 - 1) as usize;
            if j != i {
                let v: f64 = rng.gen_range(-1.0..1.0);
                t.push(i, j, v);
                rowsum[i] += v.abs();
            }
        }
        if rng.gen_bool(0.02) {
            let j = rng.gen_range(0..n);
            if j != i {
                let v: f64 = rng.gen_range(-1.0..1.0);
                t.push(i, j, v);
                rowsum[i] += v.abs();
            }
        }
    }
    for (i, s) in rowsum.iter().enumerate() {
        t.push(i, i, s + 1.0 + rng.gen_range(0.0..1.0));
    }
    t.to_csr().unwrap()
}

/// Random SPD: graph Laplacian with random positive weights plus a positive shift.
fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> CsrMatrix {
    let mut t = Triplets::new(n, n);
    let push_edge = |t: &mut Triplets, i: usize, j: usize, w: f64| {
        t.push(i, i, w);
        t.push(j, j, w);
        t.push(i, j, -w);
        t.push(j, i, -w);
    };
    for i in 0..n {
        for _ in 0..2 {
            let j = (i + rng.gen_range(1..8)).min(n - 1);
            if j != i {
                push_edge(&mut t, i, j, rng.gen_range(0.1..2.0));
            }
        }
        t.push(i, i, rng.gen_range(0.01..0.5));
    }
    t.to_csr().unwrap()
}

fn residual_ratio(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.spmv(x).unwrap();
    let r = ax.iter().zip(b).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
    let bn = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    r / (1.0 + bn)
}

#[test]
fn to_csr_matches_dense_accumulation_20x20() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let t = random_triplets(&mut rng, 20, 20, 150);
    let entries: Vec<_> = t.iter().collect();
    let dense = dense_accumulate(20, 20, &entries);
    let a = t.to_csr().unwrap();
    let back = a.to_dense();
    for i in 0..20 {
        for j in 0..20 {
            assert!((dense[i][j] - back[i][j]).abs() < 1e-14);
        }
    }
}

#[test]
fn spmv_matches_dense_multiply_30x30() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let t = random_triplets(&mut rng, 30, 30, 200);
    let a = t.to_csr().unwrap();
    let x: Vec<f64> = (0..30).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let y = a.spmv(&x).unwrap();
    let yd = dense_matvec(&a.to_dense(), &x);
    for (p, q) in y.iter().zip(&yd) {
        assert!((p - q).abs() < 1e-13);
    }
}

#[test]
fn lu_matches_dense_elimination_50x50() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = diag_dominant(&mut rng, 50);
    let b: Vec<f64> = (0..50).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let x = lu_solve(&a, &b).unwrap();
    let xd = dense_solve(a.to_dense(), b.clone());
    for (p, q) in x.iter().zip(&xd) {
        assert!((p - q).abs() < 1e-9, "{p} vs {q}");
    }
}

#[test]
fn lu_residual_on_large_systems() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for &n in &[10usize, 200, 1000, 2000] {
        for (name, a) in [("diag-dominant", diag_dominant(&mut rng, n)), ("spd", random_spd(&mut rng, n))] {
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
            for ordering in [ColumnOrdering::Natural, ColumnOrdering::ReverseCuthillMcKee] {
                let lu = LuFactorization::with_ordering(&a, ordering).unwrap();
                let x = lu.solve(&b).unwrap();
                let rr = residual_ratio(&a, &x, &b);
                assert!(rr <= 1e-10, "{name} n={n} {ordering:?}: residual ratio {rr:e}");
                let xt = lu.solve_transpose(&b).unwrap();
                let rt = residual_ratio(&a.transpose(), &xt, &b);
                assert!(rt <= 1e-10, "{name} n={n} transposed: residual ratio {rt:e}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csr_densify_equals_accumulation(
        n in 1usize..12,
        m in 1usize..12,
        raw in proptest::collection::vec((0usize..1000, 0usize..1000, -5.0f64..5.0), 0..60),
    ) {
        let entries: Vec<_> = raw.iter().map(|&(r, c, v)| (r % n, c % m, v)).collect();
        let mut t = Triplets::new(n, m);
        for &(r, c, v) in &entries {
            t.push(r, c, v);
        }
        let a = t.to_csr().unwrap();
        let dense = dense_accumulate(n, m, &entries);
        let back = a.to_dense();
        for i in 0..n {
            for j in 0..m {
                prop_assert!((dense[i][j] - back[i][j]).abs() < 1e-12);
            }
        }
        for r in 0..n {
            let (cols, _) = a.row(r);
            prop_assert!(cols.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn transpose_product_matches_oracle(
        seed in 0u64..10_000,
        n in 1usize..25,
        m in 1usize..25,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_triplets(&mut rng, n, m, 3 * (n + m)).to_csr().unwrap();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let fast = a.spmv_transpose(&y).unwrap();
        let explicit = a.transpose().spmv(&y).unwrap();
        let dense = a.to_dense();
        for j in 0..m {
            let oracle: f64 = (0..n).map(|i| dense[i][j] * y[i]).sum();
            prop_assert!((fast[j] - oracle).abs() < 1e-12);
            prop_assert!((explicit[j] - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn lu_residual_random_diag_dominant(seed in 0u64..10_000, n in 1usize..120) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = diag_dominant(&mut rng, n);
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = lu_solve(&a, &b).unwrap();
        prop_assert!(residual_ratio(&a, &x, &b) <= 1e-8);
    }
}
