//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line with its runtime. Tolerances and thresholds are pinned here.
//!
//! Run with `cargo test -p wildlab-cli --test acceptance -- --nocapture`.

use std::collections::BTreeMap;
use std::time::Instant;

use wildlab::diagrams::{
    build_two_point_forests, power_count, power_count_time_diff, Classification,
    ContractingEdge, DecoratedContractedForest, EvalContext, TimeDifferenceQuery,
    TwoPointKind, VertexSpec,
};
use wildlab::exponent::{rat, Exponent};
use wildlab::fields::{sample_gff, CovarianceSpec, Field, GridSpec};
use wildlab::heat::TimeGrid;
use wildlab::params::{check_ci, kappa_guard, paper_parameters, solver_exponents};
use wildlab::picard::{
    bt_norm, picard_terms, reference_timestepper_at, solve_remainder, theta_distance,
    Nonlinearity, RemainderOptions,
};
use wildlab::study::{
    saturated_mean_check, scaling_study_eps, scaling_study_lambda, scaling_study_time,
    solution_convergence_study, StudyConfig,
};
use wildlab::trees::{enumerate_trees, LabelledTree};

fn report(criterion: &str, pass: bool, t0: Instant, detail: &str) {
    let line = format!(
        "acceptance {}: {} ({:.1}s) {}",
        criterion,
        if pass { "PASS" } else { "FAIL" },
        t0.elapsed().as_secs_f64(),
        detail
    );
    eprintln!("{line}");
    assert!(pass, "{line}");
}

fn assert_runtime(criterion: &str, t0: Instant, limit_s: f64) {
    let elapsed = t0.elapsed().as_secs_f64();
    assert!(
        elapsed < limit_s,
        "{criterion} exceeded its runtime budget: {elapsed:.1}s >= {limit_s}s"
    );
}

// ------------------------------------------------------------------------
// Criterion 1: tree calculus against an independent brute-force oracle;
// exact homogeneity identity; parity. Runtime < 10 s.
// ------------------------------------------------------------------------

/// Independent oracle: generate every ordered grammar derivation and dedup
/// by canonical form.
fn oracle_counts(n_max: usize) -> Vec<usize> {
    let mut derivations: Vec<Vec<LabelledTree>> = vec![vec![LabelledTree::leaf()]];
    for m in 2..=n_max {
        let mut new = Vec::new();
        for i in 1..m {
            for t1 in derivations[i - 1].clone() {
                for t2 in derivations[m - i - 1].clone() {
                    new.push(LabelledTree::bilinear(t1.clone(), t2));
                }
            }
        }
        for i in 1..m {
            for j in 1..m - i {
                let k = m - i - j;
                for t1 in derivations[i - 1].clone() {
                    for t2 in derivations[j - 1].clone() {
                        for t3 in derivations[k - 1].clone() {
                            new.push(LabelledTree::trilinear(
                                t1.clone(),
                                t2.clone(),
                                t3,
                            ));
                        }
                    }
                }
            }
        }
        derivations.push(new);
    }
    derivations
        .iter()
        .map(|class| {
            let set: std::collections::BTreeSet<String> =
                class.iter().map(|t| t.canonical_form()).collect();
            set.len()
        })
        .collect()
}

fn random_singular(state: &mut u64, noise_budget: usize) -> LabelledTree {
    // xorshift* driving random grammar derivations.
    let mut next = || {
        *state ^= *state << 13;
        *state ^= *state >> 7;
        *state ^= *state << 17;
        *state
    };
    if noise_budget <= 1 {
        return LabelledTree::leaf();
    }
    match next() % 3 {
        0 => LabelledTree::leaf(),
        1 => {
            let left = noise_budget / 2;
            LabelledTree::bilinear(
                random_singular(state, left.max(1)),
                random_singular(state, (noise_budget - left.max(1)).max(1)),
            )
        }
        _ => {
            let third = (noise_budget / 3).max(1);
            LabelledTree::trilinear(
                random_singular(state, third),
                random_singular(state, third),
                random_singular(state, third),
            )
        }
    }
}

#[test]
fn criterion_01_tree_calculus() {
    let t0 = Instant::now();
    let oracle = oracle_counts(5);
    let enumeration = enumerate_trees(5).unwrap();
    let mut counts_ok = oracle == vec![1, 1, 3, 8, 26];
    for m in 1..=5 {
        counts_ok &= enumeration.class(m).len() == oracle[m - 1];
        // Set equality, not only counts.
        let ours: std::collections::BTreeSet<String> = enumeration
            .class(m)
            .iter()
            .map(|t| t.canonical_form())
            .collect();
        counts_ok &= ours.len() == oracle[m - 1];
    }

    let mut state = 0x9e3779b97f4a7c15u64;
    let mut identity_ok = true;
    let mut parity_ok = true;
    for _ in 0..1000 {
        let tree = random_singular(&mut state, 12);
        identity_ok &= tree.homogeneity_affine() == tree.homogeneity_closed_form();
        parity_ok &= (tree.noise() + tree.deriv_edges()) % 2 == 1;
    }
    for tree in enumeration.all() {
        parity_ok &= (tree.noise() + tree.deriv_edges()) % 2 == 1;
    }

    let pass = counts_ok && identity_ok && parity_ok;
    assert_runtime("criterion 1", t0, 10.0);
    report(
        "criterion 1 (tree calculus)",
        pass,
        t0,
        &format!("counts {oracle:?}, exact homogeneity identity on 1000 random trees"),
    );
}

// ------------------------------------------------------------------------
// Criterion 2: admissibility across the dimension grid at half the guard,
// with witnesses on the constraint boundary. Runtime < 5 s.
// ------------------------------------------------------------------------

#[test]
fn criterion_02_condition_check() {
    let t0 = Instant::now();
    let mut pass = true;
    let mut details = Vec::new();
    for &d in &[2.2, 2.5, 3.0, 3.3, 3.6, 3.9] {
        let guard = kappa_guard(d).unwrap();
        let p = paper_parameters(d, guard / 2.0).unwrap();
        let r = check_ci(&p);
        let boundary_alpha = r.alpha_witness_noise.iter().sum::<usize>() == p.n_trees + 1;
        // A triple cannot sum below 3.
        let boundary_gamma =
            r.gamma_witness_noise.iter().sum::<usize>() == (p.n_trees + 1).max(3);
        let inequalities = r.omega_min > -1.0 && r.alpha > -1.0 && r.gamma > -2.0;
        pass &= r.pass && boundary_alpha && boundary_gamma && inequalities;
        details.push(format!("d={d}: N={} kappa={:.4}", p.n_trees, guard / 2.0));
    }
    assert_runtime("criterion 2", t0, 5.0);
    report("criterion 2 (condition check)", pass, t0, &details.join(", "));
}

// ------------------------------------------------------------------------
// Criterion 3: power counting for every tree of the d = 3 truncation and
// every complete pairing; base-case-2 algebra term by term. Runtime < 60 s.
// ------------------------------------------------------------------------

#[test]
fn criterion_03_power_counting() {
    let t0 = Instant::now();
    let d = 3.0;
    let ctx = EvalContext::from_f64(d, 0.0, 2).unwrap();
    let n_trees = paper_parameters(d, 0.01).unwrap().n_trees;
    let enumeration = enumerate_trees(n_trees).unwrap();
    let theta = Exponent::d() - Exponent::from_int(2);
    let mut pass = true;
    let mut certified = 0usize;
    let mut vanished = 0usize;
    for tau in enumeration.without_leaf() {
        let family = build_two_point_forests(tau, TwoPointKind::Plain, 2).unwrap();
        // The family covers all complete pairings.
        let expected = wildlab::diagrams::pairing_count(2 * tau.noise());
        pass &= family.len() as u128 == expected;
        for forest in &family {
            match forest.classify() {
                Classification::Unsafe { saturated_root } => {
                    // The saturated branch carries an odd number of
                    // derivative edges: the parity behind the vanishing.
                    let cert = power_count(forest, &Exponent::zero(), &ctx).unwrap();
                    pass &= cert.saturated_branch_odd_derivatives == Some(true);
                    let _ = saturated_root;
                    vanished += 1;
                }
                Classification::Safe => {
                    // theta_max >= d - 2 for cross-tree pairings.
                    let tm = ctx.eval(&forest.theta_max(&ctx));
                    pass &= tm >= ctx.eval(&theta);
                    let cert = power_count(forest, &theta, &ctx).unwrap();
                    pass &= cert.valid;
                    // Exact symbolic equality against the direct weights.
                    pass &= cert.time_exponent_rho
                        == forest.lambda(forest.rho()) + &theta.scale(&rat(1, 4));
                    pass &= cert.time_exponent_rho_bar
                        == forest.lambda(forest.rho_bar()) + &theta.scale(&rat(1, 4));
                    pass &= cert.spatial_exponent == -theta.clone();
                    certified += 1;
                }
            }
        }
    }

    // Base case 2 with generic decorations, matched term by term.
    let spec = |parent: Option<usize>, beta: Exponent, gamma: Exponent, k1: u16| VertexSpec {
        parent,
        beta,
        gamma,
        k: vec![k1, 0],
    };
    let beta_rho = Exponent::constant(rat(1, 3));
    let beta_v = Exponent::constant(rat(-1, 4));
    let gamma_e = Exponent::constant(rat(1, 5));
    let a_e = Exponent::d() - Exponent::from_int(2) + Exponent::constant(rat(1, 7));
    let forest = DecoratedContractedForest::from_specs(
        vec![
            spec(None, beta_rho.clone(), Exponent::zero(), 0),
            spec(Some(0), beta_v.clone(), gamma_e.clone(), 1),
            spec(None, beta_rho.clone(), Exponent::zero(), 0),
            spec(Some(2), beta_v.clone(), gamma_e.clone(), 0),
        ],
        vec![ContractingEdge::new(1, 3, a_e.clone())],
        2,
    )
    .unwrap();
    let theta0 = Exponent::constant(rat(1, 2));
    let cert = power_count(&forest, &theta0, &ctx).unwrap();
    pass &= cert.valid && cert.trace.len() == 1;
    // 1 + beta_v + beta_rho + gamma - a/4 - |k|/2 + theta/4, term by term.
    let expect_rho = Exponent::from_int(1)
        + &beta_v
        + &beta_rho
        + &gamma_e
        - &a_e.scale(&rat(1, 4))
        - &Exponent::constant(rat(1, 2))
        + &theta0.scale(&rat(1, 4));
    let expect_bar = Exponent::from_int(1)
        + &beta_v
        + &beta_rho
        + &gamma_e
        - &a_e.scale(&rat(1, 4))
        + &theta0.scale(&rat(1, 4));
    pass &= cert.time_exponent_rho == expect_rho;
    pass &= cert.time_exponent_rho_bar == expect_bar;

    assert_runtime("criterion 3", t0, 60.0);
    report(
        "criterion 3 (power counting)",
        pass,
        t0,
        &format!("{certified} certified pairings, {vanished} parity-vanishing"),
    );
}

// ------------------------------------------------------------------------
// Criterion 4: time-difference bookkeeping for |U| in {0, 1, 2}, property-
// based over random admissible increments.
// ------------------------------------------------------------------------

#[test]
fn criterion_04_time_difference() {
    let t0 = Instant::now();
    let d = 3.0;
    let ctx = EvalContext::from_f64(d, 0.0, 2).unwrap();
    let sigma = LabelledTree::bilinear(LabelledTree::leaf(), LabelledTree::leaf());
    let family = build_two_point_forests(&sigma, TwoPointKind::TimeDiff, 2).unwrap();
    let theta = Exponent::d() - Exponent::from_int(2);
    let mut pass = true;

    let mut state = 0x2545f4914f6cdd1du64;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        state
    };

    for forest in family.iter().filter(|f| f.classify() == Classification::Safe) {
        let c_rho = forest.children(forest.rho()).to_vec();
        let c_bar = forest.children(forest.rho_bar()).to_vec();
        // |U| = 0 equals the plain exponent.
        let q0 = TimeDifferenceQuery {
            u: vec![],
            w: vec![c_rho[0]],
            kappa: rat(1, 2),
            kappa_bar: rat(1, 2),
        };
        let cert0 = power_count_time_diff(forest, &q0, &theta, &ctx).unwrap();
        pass &= cert0.valid
            && cert0.zeta == Some(Exponent::zero())
            && cert0.time_exponent_total
                == Some(forest.lambda_total() + &theta.scale(&rat(1, 2)));

        // Random admissible (kappa, kappa_bar) in [0, 1]; the root children
        // are Dirac so every value in [0, 1] is admissible.
        for _ in 0..50 {
            let k = rat((next() % 1000) as i64, 1000);
            let kb = rat((next() % 1000) as i64, 1000);
            let u1 = c_rho[(next() % 2) as usize];
            let u2 = c_bar[(next() % 2) as usize];
            let q1 = TimeDifferenceQuery {
                u: vec![u1],
                w: vec![u1],
                kappa: k.clone(),
                kappa_bar: kb.clone(),
            };
            let cert1 = power_count_time_diff(forest, &q1, &theta, &ctx).unwrap();
            pass &= cert1.valid && cert1.zeta == Some(Exponent::constant(k.clone()));

            let q2 = TimeDifferenceQuery {
                u: vec![u1, u2],
                w: vec![u1, u2],
                kappa: k.clone(),
                kappa_bar: kb.clone(),
            };
            let cert2 = power_count_time_diff(forest, &q2, &theta, &ctx).unwrap();
            let zeta = Exponent::constant(k.clone() + &kb);
            pass &= cert2.valid && cert2.zeta == Some(zeta.clone());
            pass &= cert2.time_exponent_total
                == Some(forest.lambda_total() + &theta.scale(&rat(1, 2)) - &zeta);
        }
    }
    report("criterion 4 (time-difference counting)", pass, t0, "|U| in {0,1,2}");
}

// ------------------------------------------------------------------------
// Criterion 5: empirical GFF covariance slope and per-mode spectral
// variance. Runtime < 3 min.
// ------------------------------------------------------------------------

#[test]
fn criterion_05_gff() {
    let t0 = Instant::now();
    let grid = GridSpec::new(2, 256).unwrap();
    let samples = 500u64;
    let mut pass = true;
    let mut details = Vec::new();

    for &d in &[2.5, 3.0] {
        let cov = CovarianceSpec::new(d);
        // Averaged circular autocorrelations, accumulated along one axis.
        let m = grid.points_per_axis;
        let mut profile = vec![0.0f64; m];
        let probes = [
            grid.flat(&[1, 0]),
            grid.flat(&[0, 2]),
            grid.flat(&[3, 3]),
            grid.flat(&[7, 1]),
            grid.flat(&[128, 0]),
        ];
        let mut mode_acc = vec![0.0f64; probes.len()];
        for s in 0..samples {
            let x: Field<f64> = sample_gff(grid, &cov, 10_000 + s).unwrap();
            let ac = x.autocorrelation();
            for r in 0..m {
                profile[r] += ac.values()[grid.flat(&[0, r])];
            }
            let spec = x.spectrum();
            for (j, &p) in probes.iter().enumerate() {
                mode_acc[j] += spec[p].norm_sqr();
            }
        }
        for v in &mut profile {
            *v /= samples as f64;
        }
        // Dyadic differences cancel the smooth background.
        let mut pts = Vec::new();
        for r in 3..=24usize {
            let v = profile[r] - profile[2 * r];
            pts.push((r as f64 / m as f64, v));
        }
        let (slope, _, _) = wildlab::study::fit_loglog(&pts).unwrap();
        let slope_ok = (slope - (2.0 - d)).abs() < 0.1;
        pass &= slope_ok;
        details.push(format!("d={d}: slope {slope:.3} vs {}", 2.0 - d));

        for (j, &p) in probes.iter().enumerate() {
            let mean = mode_acc[j] / samples as f64;
            let mult = cov.multiplier(grid, p);
            let tol = 3.0 * mult * (2.0f64).sqrt() / (samples as f64).sqrt();
            pass &= (mean - mult).abs() < tol;
        }
    }
    assert_runtime("criterion 5", t0, 180.0);
    report("criterion 5 (GFF sampling)", pass, t0, &details.join("; "));
}

// ------------------------------------------------------------------------
// Criterion 6: the three scaling studies at desk scale. Each < 10 min.
// The increment exponents are taken at kappa = 1 where the bounds are
// sharp for the smooth mollifier.
// ------------------------------------------------------------------------

fn criterion6_config() -> StudyConfig {
    StudyConfig {
        d: 2.5,
        grid_m: 256,
        samples: 200,
        kappa: 1.0,
        beta: (2.0 - 2.5) / 2.0,
        tolerance: 0.15,
        ..StudyConfig::default()
    }
}

#[test]
fn criterion_06a_lambda_scaling() {
    let t0 = Instant::now();
    let rep = scaling_study_lambda(&criterion6_config()).unwrap();
    assert_runtime("criterion 6a", t0, 600.0);
    report(
        "criterion 6a (lambda scaling)",
        rep.pass,
        t0,
        &format!("slope {:.3} vs {:.3} +- 0.15", rep.fitted_slope, rep.predicted_slope),
    );
}

#[test]
fn criterion_06b_eps_difference_scaling() {
    let t0 = Instant::now();
    let rep = scaling_study_eps(&criterion6_config()).unwrap();
    let pass = rep.pass && (rep.predicted_slope - 0.5).abs() < 1e-12;
    assert_runtime("criterion 6b", t0, 600.0);
    report(
        "criterion 6b (mollification-difference scaling)",
        pass,
        t0,
        &format!("slope {:.3} vs {:.3} +- 0.15", rep.fitted_slope, rep.predicted_slope),
    );
}

#[test]
fn criterion_06c_time_increment_scaling() {
    let t0 = Instant::now();
    let mut cfg = criterion6_config();
    cfg.eps = 0.0;
    let rep = scaling_study_time(&cfg).unwrap();
    let pass = rep.pass && (rep.predicted_slope - 0.25).abs() < 1e-12;
    assert_runtime("criterion 6c", t0, 600.0);
    report(
        "criterion 6c (time-increment scaling)",
        pass,
        t0,
        &format!("slope {:.3} vs {:.3} +- 0.15", rep.fitted_slope, rep.predicted_slope),
    );
}

// ------------------------------------------------------------------------
// Criterion 7: saturated-diagram vanishing. Runtime < 3 min.
// ------------------------------------------------------------------------

#[test]
fn criterion_07_saturated_vanishing() {
    let t0 = Instant::now();
    let cfg = StudyConfig {
        d: 3.0,
        grid_m: 256,
        samples: 500,
        eps: 1.0 / 32.0,
        time: 0.01,
        probes: 3,
        ..StudyConfig::default()
    };
    let rep = saturated_mean_check(&cfg).unwrap();
    assert_runtime("criterion 7", t0, 180.0);
    let sigmas: Vec<String> = rep.probes.iter().map(|p| format!("{:.2}", p.sigmas)).collect();
    report(
        "criterion 7 (saturated-diagram vanishing)",
        rep.pass,
        t0,
        &format!("probe means within 3 sigma of 0 (sigmas: {})", sigmas.join(", ")),
    );
}

// ------------------------------------------------------------------------
// Criterion 8: solver against the direct time stepper on smooth data, the
// Lipschitz bound on 20 perturbed pairs, and contraction factors < 1.
// Runtime < 5 min.
// ------------------------------------------------------------------------

fn smooth_field(grid: GridSpec, seed: u64, amp: f64) -> Field<f64> {
    // A fixed low-mode trigonometric polynomial (smooth data).
    let m = grid.points_per_axis as f64;
    let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let coeffs: Vec<(f64, f64, f64)> = (0..4)
        .map(|_| (next(), next(), next()))
        .collect();
    let vals: Vec<f64> = (0..grid.len())
        .map(|i| {
            let c = grid.coords(i);
            let (x1, x2) = (c[0] as f64 / m, c[1] as f64 / m);
            let mut v = 0.0;
            for (j, (a, b, ph)) in coeffs.iter().enumerate() {
                let k = (j + 1) as f64;
                v += a * (2.0 * std::f64::consts::PI * k * x1 + ph).cos()
                    + b * (2.0 * std::f64::consts::PI * k * x2 - ph).sin();
            }
            amp * v
        })
        .collect();
    Field::from_values(grid, vals).unwrap()
}

#[test]
fn criterion_08_solver_oracle_and_lipschitz() {
    let t0 = Instant::now();
    let grid = GridSpec::new(2, 64).unwrap();
    let d = 3.0;
    let kappa = kappa_guard(d).unwrap() / 2.0;
    let params = paper_parameters(d, kappa).unwrap();
    let exps = solver_exponents(&check_ci(&params)).unwrap();
    let nl = Nonlinearity::scalar_default(2);
    let horizon = 0.02;
    let grid_t = TimeGrid::graded(horizon, 48, 2.0).unwrap();
    let mut pass = true;
    let mut details = Vec::new();

    // Reference comparison on smooth data.
    let x0 = smooth_field(grid, 7, 0.8);
    let bundle = picard_terms(&x0, &params, &nl, &grid_t).unwrap();
    let opts = RemainderOptions::default();
    let sol = solve_remainder(&bundle, &exps, &nl, &opts).unwrap();
    pass &= sol
        .iterations
        .iter()
        .filter_map(|l| l.contraction_factor)
        .all(|c| c < 1.0);
    let reference =
        reference_timestepper_at(&x0, &grid_t.nodes, &nl, 4096, None).unwrap();
    let mut rel_err = 0.0f64;
    for (j, &t) in grid_t.nodes.iter().enumerate() {
        if t < horizon / 4.0 {
            continue;
        }
        let diff = sol.solution.fields[j].sub(&reference.fields[j]).unwrap();
        let denom = reference.fields[j].sup_norm().max(1e-12);
        rel_err = rel_err.max(diff.sup_norm() / denom);
    }
    pass &= rel_err <= 1e-3;
    details.push(format!("relative sup-error {rel_err:.2e}"));

    // 1-Lipschitz in the initial-data metric over 20 perturbed pairs.
    let mut lipschitz_ok = true;
    let mut worst_ratio = 0.0f64;
    for i in 0..20u64 {
        let x = smooth_field(grid, 100 + i, 0.7);
        let perturbation = smooth_field(grid, 200 + i, 0.05 + 0.002 * i as f64);
        let x_bar = x.add(&perturbation).unwrap();
        let b1 = picard_terms(&x, &params, &nl, &grid_t).unwrap();
        let b2 = picard_terms(&x_bar, &params, &nl, &grid_t).unwrap();
        let theta_dist = theta_distance(&b1, &b2).unwrap();
        let s1 = solve_remainder(&b1, &exps, &nl, &opts).unwrap();
        let s2 = solve_remainder(&b2, &exps, &nl, &opts).unwrap();
        pass &= s1
            .iterations
            .iter()
            .chain(s2.iterations.iter())
            .filter_map(|l| l.contraction_factor)
            .all(|c| c < 1.0);
        let diff = s1.remainder.sub(&s2.remainder).unwrap();
        let r_dist = bt_norm(&diff, exps.theta_remainder);
        worst_ratio = worst_ratio.max(r_dist / theta_dist);
        lipschitz_ok &= r_dist <= theta_dist;
    }
    pass &= lipschitz_ok;
    details.push(format!("worst |R - Rbar|/Theta = {worst_ratio:.3}"));

    assert_runtime("criterion 8", t0, 300.0);
    report("criterion 8 (solver)", pass, t0, &details.join("; "));
}

// ------------------------------------------------------------------------
// Criterion 9: Cauchy convergence of the solutions along the mollification
// ladder. Runtime < 30 min.
// ------------------------------------------------------------------------

#[test]
fn criterion_09_solution_convergence() {
    let t0 = Instant::now();
    let cfg = StudyConfig {
        d: 3.0,
        grid_m: 256,
        seeds: 20,
        eps_ladder: vec![1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0],
        eta_offset: 0.1,
        t_floor_divisor: 8.0,
        horizon_cap: 0.05,
        ..StudyConfig::default()
    };
    let rep = solution_convergence_study(&cfg).unwrap();
    let increments: Vec<String> = rep
        .pairs
        .iter()
        .map(|p| format!("{:.3e}", p.median_increment))
        .collect();
    assert_runtime("criterion 9", t0, 1800.0);
    report(
        "criterion 9 (solution convergence)",
        rep.strictly_decreasing,
        t0,
        &format!("median increments [{}] at eta = {}", increments.join(", "), rep.eta),
    );
}

// ------------------------------------------------------------------------
// Criterion 10: byte-identical reruns of every CLI study.
// ------------------------------------------------------------------------

#[test]
fn criterion_10_cli_determinism() {
    let t0 = Instant::now();
    let bin = env!("CARGO_BIN_EXE_wildlab");
    let base = tempfile::tempdir().unwrap();

    let small_common = serde_json::json!({
        "grid_m": 64, "samples": 12, "seeds": 3, "d": 2.5, "beta": -0.25,
        "eps": 0.0625, "time_factor": 0.05,
        "lambda_ladder": [0.125, 0.1875, 0.25, 0.375],
        "eps_ladder": [0.25, 0.2102, 0.1768, 0.1487, 0.125],
        "s_ladder": [6.1e-5, 1.2e-4, 2.4e-4, 4.9e-4, 9.8e-4],
        "window_lo": 3, "window_hi": 8,
        "time": 0.005, "probes": 2,
    });
    let conv_cfg = serde_json::json!({
        "grid_m": 64, "seeds": 2, "d": 3.0,
        "eps_ladder": [0.125, 0.0625], "horizon_cap": 0.02,
    });

    let mut pass = true;
    for kind in ["lambda", "eps", "time", "covariance", "heat-bound", "convergence", "vanishing"] {
        let cfg_path = base.path().join(format!("{kind}.json"));
        let cfg = if kind == "convergence" { &conv_cfg } else { &small_common };
        std::fs::write(&cfg_path, serde_json::to_vec(cfg).unwrap()).unwrap();
        let mut digests: Vec<BTreeMap<String, String>> = Vec::new();
        let mut series: Vec<Vec<u8>> = Vec::new();
        for run in 0..2 {
            let out = base.path().join(format!("{kind}-{run}"));
            let status = std::process::Command::new(bin)
                .args([
                    "study",
                    kind,
                    "--config",
                    cfg_path.to_str().unwrap(),
                    "--out",
                    out.to_str().unwrap(),
                ])
                .env("WILDLAB_THREADS", "2")
                .output()
                .unwrap();
            // Small runs may fail their statistical gate (exit 1); only
            // usage/domain errors would exit differently or skip outputs.
            assert!(
                status.status.code() == Some(0) || status.status.code() == Some(1),
                "{kind}: {:?}",
                String::from_utf8_lossy(&status.stderr)
            );
            series.push(std::fs::read(out.join("series.csv")).unwrap());
            let manifest: serde_json::Value =
                serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap())
                    .unwrap();
            let mut map = BTreeMap::new();
            for entry in manifest["outputs"].as_array().unwrap() {
                map.insert(
                    entry["path"].as_str().unwrap().to_string(),
                    entry["sha256"].as_str().unwrap().to_string(),
                );
            }
            digests.push(map);
        }
        let same = series[0] == series[1] && digests[0] == digests[1];
        if !same {
            eprintln!("criterion 10: {kind} differs between reruns");
        }
        pass &= same;
    }
    report("criterion 10 (CLI determinism)", pass, t0, "7 study kinds, 2 runs each");
}
