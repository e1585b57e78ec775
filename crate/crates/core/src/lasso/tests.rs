use super::*;
use crate::seed::rng_from;
use proptest::prelude::*;
use rand::Rng as _;

/// Unpenalized logistic regression with intercept and one feature, solved
/// by plain Newton iteration on the 2×2 system.
fn newton_oracle(x: &[f64], y: &[u8]) -> (f64, f64) {
    let (mut b0, mut b1) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let (mut g0, mut g1, mut h00, mut h01, mut h11) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&xi, &yi) in x.iter().zip(y) {
            let p = 1.0 / (1.0 + (-(b0 + b1 * xi)).exp());
            let r = p - yi as f64;
            let w = p * (1.0 - p);
            g0 += r;
            g1 += r * xi;
            h00 += w;
            h01 += w * xi;
            h11 += w * xi * xi;
        }
        let det = h00 * h11 - h01 * h01;
        let d0 = (h11 * g0 - h01 * g1) / det;
        let d1 = (h00 * g1 - h01 * g0) / det;
        b0 -= d0;
        b1 -= d1;
        if d0.abs().max(d1.abs()) < 1e-14 {
            break;
        }
    }
    (b0, b1)
}

#[test]
fn zero_penalty_matches_newton() {
    let xs = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0];
    let ys = [0u8, 0, 1, 0, 1, 0, 1, 1];
    let (b0, b1) = newton_oracle(&xs, &ys);
    let x = DenseDesign::from_rows(&xs.iter().map(|&v| vec![v]).collect::<Vec<_>>());
    let m = fit_lasso_logistic(&x, &ys, 0.0).unwrap();
    assert!((m.intercept - b0).abs() < 1e-4, "{} vs {b0}", m.intercept);
    assert!(
        (m.coefficients[0] - b1).abs() < 1e-4,
        "{} vs {b1}",
        m.coefficients[0]
    );
}

#[test]
fn penalty_at_lambda_max_gives_null_model() {
    let rows = vec![
        vec![1u8, 0],
        vec![1, 1],
        vec![0, 1],
        vec![0, 0],
        vec![1, 0],
        vec![0, 0],
    ];
    let y = [1u8, 1, 0, 0, 1, 0];
    let x = BinaryDesign::from_dense(&rows);
    let lmax = lambda_max(&x, &y);
    // Column 0 agrees with y except nowhere: (1/6)·Σ x_0 (y − ½) = 1.5/6.
    assert!((lmax - 0.25).abs() < 1e-15);
    for lambda in [lmax, 2.0 * lmax] {
        let m = fit_lasso_logistic(&x, &y, lambda).unwrap();
        assert!(m.coefficients.iter().all(|&b| b == 0.0));
        assert_eq!(m.intercept, (0.5f64 / 0.5).ln());
    }
}

#[test]
fn errors() {
    let x = BinaryDesign::from_dense(&[vec![1], vec![0], vec![1]]);
    assert!(matches!(
        fit_lasso_logistic(&x, &[1, 1, 1], 0.1),
        Err(crate::Error::SingleClass)
    ));
    assert!(fit_lasso_logistic(&x, &[1, 0, 1], -1.0).is_err());
    assert!(fit_lasso_logistic(&x, &[1, 0, 1], f64::NAN).is_err());
    assert!(fit_lasso_logistic(&x, &[1, 0], 0.1).is_err());
    let d = DenseDesign::from_rows(&[vec![f64::INFINITY], vec![0.0]]);
    assert!(matches!(
        fit_lasso_logistic(&d, &[1, 0], 0.1),
        Err(crate::Error::NonFinite(_))
    ));
}

/// Penalized 1-D objective for column `j` alone, intercept profiled out by a
/// fine search.
fn one_dim_objective(col: &[f64], y: &[u8], lambda: f64, b: f64) -> f64 {
    let n = y.len() as f64;
    let loss = |b0: f64| {
        col.iter()
            .zip(y)
            .map(|(&x, &t)| {
                let e = b0 + b * x;
                (1.0 + e.exp()).ln() - t as f64 * e
            })
            .sum::<f64>()
            / n
    };
    let mut best = f64::INFINITY;
    let mut b0 = -8.0;
    while b0 <= 8.0 {
        best = best.min(loss(b0));
        b0 += 0.01;
    }
    best + lambda * b.abs()
}

#[test]
fn perfect_predictor_gets_largest_coefficient() {
    let mut rng = rng_from(3);
    let n = 60;
    let y: Vec<u8> = (0..n).map(|i| (i % 3 == 0) as u8).collect();
    let cols: Vec<Vec<f64>> = vec![
        (0..n).map(|_| rng.gen_bool(0.5) as u8 as f64).collect(),
        y.iter().map(|&v| v as f64).collect(),
        (0..n).map(|_| rng.gen_bool(0.3) as u8 as f64).collect(),
    ];
    let lambda = 0.05;
    // Grid-search oracle: 1-D penalized optimum of each column on its own.
    let grid: Vec<f64> = (-600..=600).map(|k| k as f64 * 0.01).collect();
    let best_mag: Vec<f64> = cols
        .iter()
        .map(|c| {
            grid.iter()
                .copied()
                .min_by(|&a, &b| {
                    one_dim_objective(c, &y, lambda, a)
                        .total_cmp(&one_dim_objective(c, &y, lambda, b))
                })
                .unwrap()
                .abs()
        })
        .collect();
    let oracle_best = (0..3)
        .max_by(|&a, &b| best_mag[a].total_cmp(&best_mag[b]))
        .unwrap();
    assert_eq!(oracle_best, 1);

    let x = DenseDesign::from_columns(n, cols);
    let m = fit_lasso_logistic(&x, &y, lambda).unwrap();
    let fitted_best = (0..3)
        .max_by(|&a, &b| m.coefficients[a].abs().total_cmp(&m.coefficients[b].abs()))
        .unwrap();
    assert_eq!(fitted_best, oracle_best);
}

pub(crate) fn random_problem(seed: u64, n: usize, p: usize) -> (BinaryDesign, Vec<u8>) {
    let mut rng = rng_from(seed);
    let beta: Vec<f64> = (0..p)
        .map(|j| {
            if j % 3 == 0 {
                rng.gen_range(-2.0..2.0)
            } else {
                0.0
            }
        })
        .collect();
    let rows: Vec<Vec<u8>> = (0..n)
        .map(|_| {
            (0..p)
                .map(|_| {
                    let q = rng.gen_range(0.1..0.6);
                    rng.gen_bool(q) as u8
                })
                .collect()
        })
        .collect();
    let mut y: Vec<u8> = rows
        .iter()
        .map(|r| {
            let eta: f64 = -0.3 + r.iter().zip(&beta).map(|(&x, b)| x as f64 * b).sum::<f64>();
            rng.gen_bool(sigmoid(eta)) as u8
        })
        .collect();
    y[0] = 0;
    y[1] = 1;
    (BinaryDesign::from_dense(&rows), y)
}

#[test]
fn kkt_holds_on_random_problems() {
    for seed in 0..20 {
        let (x, y) = random_problem(seed, 150, 20);
        let lmax = lambda_max(&x, &y);
        for frac in [0.5, 0.1, 0.01] {
            let m = fit_lasso_logistic(&x, &y, lmax * frac).unwrap();
            let r = kkt_residual(&x, &y, &m);
            assert!(r < 1e-4, "seed {seed} frac {frac}: residual {r}");
        }
    }
}

#[test]
fn dense_and_binary_solutions_agree() {
    let (x, y) = random_problem(4, 100, 6);
    let dense = DenseDesign::from_columns(
        100,
        (0..6)
            .map(|j| {
                let mut c = vec![0.0; 100];
                for &i in x.column(j) {
                    c[i as usize] = 1.0;
                }
                c
            })
            .collect(),
    );
    let lambda = 0.2 * lambda_max(&x, &y);
    let a = fit_lasso_logistic(&x, &y, lambda).unwrap();
    let b = fit_lasso_logistic(&dense, &y, lambda).unwrap();
    for (u, v) in a.coefficients.iter().zip(&b.coefficients) {
        assert!((u - v).abs() < 1e-6);
    }
}

#[test]
fn sparsity_shrinks_as_penalty_grows() {
    let mut violations = 0;
    let mut steps = 0;
    for seed in 0..10 {
        let (x, y) = random_problem(100 + seed, 200, 30);
        let grid = default_grid(&x, &y);
        let path = fit_path(&x, &y, &grid, &SolverSettings::default()).unwrap();
        assert_eq!(path[0].n_nonzero(), 0);
        // Path runs from large to small λ: nonzero counts should not drop.
        for w in path.windows(2) {
            steps += 1;
            if w[1].n_nonzero() < w[0].n_nonzero() {
                violations += 1;
            }
        }
    }
    assert!(
        violations as f64 <= 0.05 * steps as f64,
        "{violations}/{steps}"
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn objective_never_increases(seed in 0u64..10_000, frac in 0.001f64..0.9) {
        let (x, y) = random_problem(seed, 80, 12);
        let lambda = lambda_max(&x, &y) * frac;
        let (m, info) = fit_lasso_logistic_with(&x, &y, lambda, None, &SolverSettings::default()).unwrap();
        prop_assert!(info.objective_trace.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!((objective(&x, &y, &m) - info.objective_trace.last().unwrap()).abs() < 1e-12);
    }
}
