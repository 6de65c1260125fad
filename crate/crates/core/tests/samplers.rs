use midpoint_langevin::analysis::{exact_uld_moments, rmm_moment_oracle};
use midpoint_langevin::samplers::{run_chains, Method, Schedule};
use midpoint_langevin::targets::{quadratic_target, QuadraticTarget};

/// Sample variance of coordinate `k` of the final positions, with its standard error.
fn variance_with_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let c: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    let v = c.iter().sum::<f64>() / n;
    let vv = c.iter().map(|y| (y - v) * (y - v)).sum::<f64>() / (n - 1.0);
    (v, (vv / n).sqrt())
}

/// Fixed point of `Σ ← AΣAᵀ + Q` for 2×2 matrices.
fn stationary_2x2(a: [[f64; 2]; 2], q: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut s = [[0.0; 2]; 2];
    for _ in 0..200_000 {
        let mut next = q;
        for r in 0..2 {
            for c in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        next[r][c] += a[r][i] * s[i][j] * a[c][j];
                    }
                }
            }
        }
        s = next;
    }
    s
}

#[test]
fn euler_and_lmc_match_their_discrete_stationary_variances() {
    let a = 2.0;
    let h = 0.05;
    let target = quadratic_target(&[a], &[0.0]).unwrap();
    let u = 1.0 / a;
    let chains = 20_000;

    // Euler for the kinetic diffusion: A = [[1, h], [−uha, 1−2h]], Q = diag(0, 4uh)
    let euler = stationary_2x2([[1.0, h], [-u * h * a, 1.0 - 2.0 * h]], [[0.0, 0.0], [0.0, 4.0 * u * h]]);
    let s = Schedule::explicit(h, 2000, a, 1, 2).unwrap();
    let xs: Vec<f64> = run_chains(Method::EulerUld, &target, &s, chains, 1, None)
        .unwrap()
        .into_iter()
        .map(|r| r.state.x[0])
        .collect();
    let (v, se) = variance_with_se(&xs);
    assert!((v - euler[0][0]).abs() < 4.0 * se, "euler {v} vs {}", euler[0][0]);

    // overdamped: x' = (1 − ha)x + √(2h)ζ
    let lmc = 2.0 * h / (1.0 - (1.0 - h * a).powi(2));
    let xs: Vec<f64> = run_chains(Method::Lmc, &target, &s, chains, 2, None)
        .unwrap()
        .into_iter()
        .map(|r| r.state.x[0])
        .collect();
    let (v, se) = variance_with_se(&xs);
    assert!((v - lmc).abs() < 4.0 * se, "lmc {v} vs {lmc}");
}

#[test]
fn single_step_oracle_matches_a_million_chains() {
    let target = quadratic_target(&[1.0], &[0.0]).unwrap();
    let h = 0.05;
    let s = Schedule::explicit(h, 1, 1.0, 1, 2).unwrap();
    let runs = run_chains(Method::Rmm, &target, &s, 1_000_000, 3, Some(&[0.7])).unwrap();
    let oracle_rest = rmm_moment_oracle(&target, h, 1, 128, &[0.7], &[0.0]).unwrap();
    let n = runs.len() as f64;
    let mx = oracle_rest.means[1][0];
    let mv = oracle_rest.means[1][1];
    let cov = &oracle_rest.covariances[1];
    let mut sums = [0.0; 5];
    for r in &runs {
        let (x, v) = (r.state.x[0], r.state.v[0]);
        sums[0] += x;
        sums[1] += v;
        sums[2] += (x - mx) * (x - mx);
        sums[3] += (x - mx) * (v - mv);
        sums[4] += (v - mv) * (v - mv);
    }
    let z_mean_x = (sums[0] / n - mx) / (cov[(0, 0)] / n).sqrt();
    let z_mean_v = (sums[1] / n - mv) / (cov[(1, 1)] / n).sqrt();
    assert!(z_mean_x.abs() < 3.0 && z_mean_v.abs() < 3.0, "{z_mean_x} {z_mean_v}");
    let pairs = [(0, 0, sums[2]), (0, 1, sums[3]), (1, 1, sums[4])];
    for (i, j, s) in pairs {
        let se = ((cov[(i, i)] * cov[(j, j)] + cov[(i, j)].powi(2)) / n).sqrt();
        let z = (s / n - cov[(i, j)]) / se;
        assert!(z.abs() < 3.0, "cov ({i},{j}): z = {z}");
    }
}

#[test]
fn oracle_follows_free_dynamics_when_the_gradient_is_negligible() {
    let target = quadratic_target(&[1e-12, 1.0], &[0.0, 0.0]).unwrap();
    let (h, n) = (0.05, 40);
    let x0 = [0.3, 0.0];
    let v0 = [1.5, 0.0];
    let trace = rmm_moment_oracle(&target, h, n, 64, &x0, &v0).unwrap();
    let t = h * n as f64;
    let x = x0[0] + 0.5 * (1.0 - (-2.0 * t).exp()) * v0[0];
    let v = (-2.0 * t).exp() * v0[0];
    assert!((trace.means[n][0] - x).abs() < 1e-8);
    assert!((trace.means[n][2] - v).abs() < 1e-8);
}

#[test]
fn oracle_covariance_reaches_a_fixed_point() {
    let target = QuadraticTarget::with_condition_number(2, 1.0, 10.0).unwrap();
    let h = 0.05;
    let kappa = 10.0;
    let n = (30.0 * kappa / h) as usize;
    let trace = rmm_moment_oracle(&target, h, n, 64, &[0.0; 2], &[0.0; 2]).unwrap();
    let step_change = |k: usize| (&trace.covariances[k] - &trace.covariances[k - 1]).amax();
    let at_10 = step_change((10.0 * kappa / h) as usize);
    let at_30 = step_change(n);
    assert!(at_30 < 1e-10, "{at_30}");
    assert!(at_30 < at_10 * 1e-6);
    // the fixed point is close to the target law
    let var = trace.covariances[n][(0, 0)];
    assert!((var - 1.0).abs() < 0.01, "{var}");
    for cov in &trace.covariances {
        let e = nalgebra::SymmetricEigen::new(cov.clone()).eigenvalues;
        assert!(e.min() > -1e-12);
    }
}

#[test]
fn exact_moments_reach_the_stationary_law() {
    let target = quadratic_target(&[0.5, 2.0, 8.0], &[1.0, 0.0, -1.0]).unwrap();
    let u = 1.0 / 8.0;
    let (m, c) = exact_uld_moments(&target, 3000.0, &[3.0, 3.0, 3.0], &[1.0, 1.0, 1.0]).unwrap();
    for (i, a) in [0.5, 2.0, 8.0].iter().enumerate() {
        assert!((c[(i, i)] - 1.0 / a).abs() < 1e-9);
        assert!((c[(3 + i, 3 + i)] - u).abs() < 1e-9);
        assert!(c[(i, 3 + i)].abs() < 1e-9);
        assert!((m[i] - target.center()[i]).abs() < 1e-9);
    }
}

#[test]
fn exact_moments_match_fine_euler_moment_recursion() {
    let target = quadratic_target(&[1.0], &[0.0]).unwrap();
    let (x0, v0, t) = (0.8, -0.5, 0.1);
    let (m, c) = exact_uld_moments(&target, t, &[x0], &[v0]).unwrap();
    let dt = 1e-6;
    let steps = (t / dt).round() as usize;
    let (mut mx, mut mv) = (x0, v0);
    let mut s = [[0.0f64; 2]; 2];
    for _ in 0..steps {
        let a = [[1.0, dt], [-dt, 1.0 - 2.0 * dt]];
        let nm = (a[0][0] * mx + a[0][1] * mv, a[1][0] * mx + a[1][1] * mv);
        let mut ns = [[0.0; 2]; 2];
        for r in 0..2 {
            for cc in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        ns[r][cc] += a[r][i] * s[i][j] * a[cc][j];
                    }
                }
            }
        }
        ns[1][1] += 4.0 * dt;
        (mx, mv) = nm;
        s = ns;
    }
    assert!((m[0] - mx).abs() < 1e-4 && (m[1] - mv).abs() < 1e-4);
    for r in 0..2 {
        for cc in 0..2 {
            assert!((c[(r, cc)] - s[r][cc]).abs() < 1e-4, "({r},{cc}) {} vs {}", c[(r, cc)], s[r][cc]);
        }
    }
}

#[test]
fn small_steps_track_the_exact_diffusion() {
    let target = quadratic_target(&[1.0, 4.0], &[0.5, -0.5]).unwrap();
    let (h, n) = (0.01, 100);
    let x0 = [2.0, 1.0];
    let v0 = [0.0, 0.0];
    let trace = rmm_moment_oracle(&target, h, n, 64, &x0, &v0).unwrap();
    let (m, c) = exact_uld_moments(&target, h * n as f64, &x0, &v0).unwrap();
    assert!((&trace.means[n] - &m).amax() < 1e-5);
    assert!((&trace.covariances[n] - &c).amax() < 1e-5);
}

#[test]
fn parallel_chains_reach_the_target_variance() {
    let target = quadratic_target(&[1.0, 3.0], &[0.0, 0.0]).unwrap();
    let s = Schedule::explicit(0.05, 600, 3.0, 4, 3).unwrap();
    let runs = run_chains(Method::RmmParallel, &target, &s, 2000, 4, None).unwrap();
    for (k, a) in [1.0, 3.0].iter().enumerate() {
        let xs: Vec<f64> = runs.iter().map(|r| r.state.x[k]).collect();
        let (v, se) = variance_with_se(&xs);
        assert!((v - 1.0 / a).abs() < 4.0 * se + 0.01 / a, "coord {k}: {v}");
    }
}
