//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with its measured numbers. Run with `--nocapture` to see them.
//!
//! The Lemma-1 coverage criterion exercises the CLI and lives in the
//! `mmi-cli` acceptance suite; everything else is here.

use mmi_core::isotonic::{
    brute_force_fit, induced_order, sparse_isotonic, step_interpolant, sum_squared_error,
    DEFAULT_ENUM_BUDGET,
};
use mmi_core::linalg;
use mmi_core::lipschitz::{
    caps_of_points, grid_search_caps, interpolable, lipschitz_interpolant, lipschitz_sparse_fit,
};
use mmi_core::model::{make_ground_truth, sample_dataset, ModelConstants, Transfer};
use mmi_core::net::cap_fraction;
use mmi_core::pipeline::{
    fit_mmi, l2_loss_mc, mc_gap, procrustes_dist, sensitivity_check, FitConfig, FitMode,
};
use mmi_core::sdp::{estimate_q, fantope_project, solve_sdp, sym_eigen, SdpConfig};
use mmi_core::stein::{sigma_tilde, ScoreTable};
use mmi_core::theory::theory_params;

use itertools::Itertools;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values[values.len() / 2]
}

/// Proposition-2 oracle equivalence: the exact sparse solver matches
/// exhaustive index-set enumeration plus grid brute force on 200 random
/// instances, within the grid resolution bound.
#[test]
fn oracle_equivalence_sparse_isotonic() {
    let started = std::time::Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5041);
    let b = 1.0;
    for case in 0..200 {
        let d = rng.gen_range(2..=6);
        let k = rng.gen_range(1..=2usize);
        let s = rng.gen_range(1..=2.min(d));
        let n = rng.gen_range(2..=6);
        let mut x = Array2::zeros((n, d));
        for v in x.iter_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        let mut m = Array2::zeros((d, k));
        for v in m.iter_mut() {
            if rng.gen_bool(0.75) {
                *v = rng.gen_range(0.0..1.0);
            }
        }
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.3..1.3)).collect();

        let fit = sparse_isotonic(&x, &y, &m, s, b, DEFAULT_ENUM_BUDGET).unwrap();

        let mut oracle = f64::INFINITY;
        for combo in (0..d).combinations(s) {
            let order = induced_order(&m, &combo, &x).unwrap();
            let grid_fit = brute_force_fit(&order, &y, b, 21).unwrap();
            oracle = oracle.min(sum_squared_error(&y, &grid_fit));
        }

        let bound = b * b * n as f64 / 400.0;
        assert!(
            fit.objective <= oracle + 1e-12,
            "case {case}: exact solver above the grid oracle ({} vs {oracle})",
            fit.objective
        );
        assert!(
            oracle - fit.objective <= bound,
            "case {case}: grid gap {} above bound {bound}",
            oracle - fit.objective
        );
    }
    let secs = started.elapsed().as_secs_f64();
    assert!(secs < 60.0, "oracle equivalence took {secs:.1}s (budget 60s)");
    println!("ACCEPTANCE oracle-equivalence-prop2: PASS (200 instances, {secs:.1}s)");
}

/// Lipschitz oracle equivalence on lattice-aligned instances: the Dykstra
/// projection path matches the cap-constrained grid search, and every
/// output is interpolable.
#[test]
fn oracle_equivalence_lipschitz() {
    let started = std::time::Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x4c49);
    let b = 1.0;
    for case in 0..100 {
        let d = rng.gen_range(1..=4);
        let k = rng.gen_range(1..=2usize);
        let s = rng.gen_range(1..=2.min(d));
        let n = rng.gen_range(2..=5);
        // lattice-valued data keeps every pairwise cap on the value grid,
        // so the 21-step oracle bound is tight
        let mut x = Array2::zeros((n, d));
        for v in x.iter_mut() {
            *v = 0.1 * rng.gen_range(-10..=10i32) as f64;
        }
        let mut m = Array2::zeros((d, k));
        for i in 0..d {
            m[[i, 0]] = [0.0, 0.5, 1.0][rng.gen_range(0..3)];
        }
        let y: Vec<f64> = (0..n).map(|_| 0.05 * rng.gen_range(0..=20i32) as f64).collect();

        let fit = lipschitz_sparse_fit(&x, &y, &m, s, b, DEFAULT_ENUM_BUDGET, 1e-12).unwrap();
        assert!(fit.converged, "case {case}: Dykstra did not converge");
        assert!(interpolable(&fit.anchors), "case {case}: anchors not interpolable");

        let mut oracle = f64::INFINITY;
        for combo in (0..d).combinations(s) {
            let proj = mmi_core::isotonic::project_samples(&m, &combo, &x);
            let caps = caps_of_points(&proj);
            let grid = grid_search_caps(&y, &caps, b, 21).unwrap();
            oracle = oracle.min(sum_squared_error(&y, &grid));
        }
        let bound = b * b * n as f64 / 400.0;
        assert!(
            fit.objective <= oracle + 1e-9,
            "case {case}: projection above grid oracle ({} vs {oracle})",
            fit.objective
        );
        assert!(
            oracle - fit.objective <= bound,
            "case {case}: grid gap {} above bound {bound}",
            oracle - fit.objective
        );
    }
    let secs = started.elapsed().as_secs_f64();
    assert!(secs < 120.0, "lipschitz oracle took {secs:.1}s (budget 120s)");
    println!("ACCEPTANCE oracle-equivalence-lipschitz: PASS (100 instances, {secs:.1}s)");
}

/// Fantope solver exactness at zero penalty: the objective equals the sum
/// of the top-k eigenvalues, and the projection satisfies its invariants.
#[test]
fn fantope_solver_exactness() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x4641);
    let mut worst_gap = 0.0f64;
    for case in 0..50 {
        let d = rng.gen_range(2..=12);
        let k = rng.gen_range(1..=d);
        let mut sigma = Array2::zeros((d, d));
        for i in 0..d {
            for j in i..d {
                let v = rng.gen_range(-2.0..2.0);
                sigma[[i, j]] = v;
                sigma[[j, i]] = v;
            }
        }
        let sol = solve_sdp(&sigma, k, &SdpConfig::default()).unwrap();
        let dec = sym_eigen(&sigma).unwrap();
        let top_k: f64 = dec.eigenvalues[..k].iter().sum();
        let gap = (sol.objective - top_k).abs();
        worst_gap = worst_gap.max(gap);
        assert!(gap <= 1e-5, "case {case} (d={d}, k={k}): objective gap {gap}");

        // feasibility of the returned iterate
        let wtrace: f64 = (0..d).map(|i| sol.w[[i, i]]).sum();
        assert!((wtrace - k as f64).abs() <= 1e-6, "exit trace violation");
        let wdec = sym_eigen(&sol.w).unwrap();
        for &ev in &wdec.eigenvalues {
            assert!((-1e-6..=1.0 + 1e-6).contains(&ev), "exit eigenvalue {ev}");
        }

        // projection invariants at 1e-8
        let p = fantope_project(&sigma, k).unwrap();
        let trace: f64 = (0..d).map(|i| p[[i, i]]).sum();
        assert!((trace - k as f64).abs() <= 1e-8, "trace {trace} vs k {k};");
        let pdec = sym_eigen(&p).unwrap();
        for &ev in &pdec.eigenvalues {
            assert!((-1e-8..=1.0 + 1e-8).contains(&ev), "eigenvalue {ev} outside [0,1]");
        }
        let pp = fantope_project(&p, k).unwrap();
        assert!(linalg::fro_dist(&p, &pp) <= 1e-8, "projection not idempotent");
    }
    println!("ACCEPTANCE fantope-exactness: PASS (50 matrices, worst objective gap {worst_gap:.2e})");
}

fn fd_hessian(transfer: &Transfer, v: &[f64], h: f64) -> Array2<f64> {
    let k = v.len();
    let mut out = Array2::zeros((k, k));
    for a in 0..k {
        for b in 0..k {
            let mut vpp = v.to_vec();
            let mut vpm = v.to_vec();
            let mut vmp = v.to_vec();
            let mut vmm = v.to_vec();
            vpp[a] += h;
            vpp[b] += h;
            vpm[a] += h;
            vpm[b] -= h;
            vmp[a] -= h;
            vmp[b] += h;
            vmm[a] -= h;
            vmm[b] -= h;
            out[[a, b]] = (transfer.eval(&vpp) - transfer.eval(&vpm) - transfer.eval(&vmp)
                + transfer.eval(&vmm))
                / (4.0 * h * h);
        }
    }
    out
}

/// Population moment identity: with no truncation, the sample mean of
/// `Y·T(X)` matches `B D̂₀ Bᵀ = Q (R D̂₀ Rᵀ) Qᵀ`, where `D̂₀` is the mean
/// finite-difference Hessian of the transfer at the projected points.
#[test]
fn stein_identity_population() {
    let started = std::time::Instant::now();
    let constants = ModelConstants::desk_default(6, 2, 3);
    let gt = make_ground_truth(&constants, 1).unwrap();
    let n = 100_000;
    let data = sample_dataset(&gt, n, 2).unwrap();
    let scores = ScoreTable::from_covariates(&data.x, constants.c).unwrap();
    let sigma = sigma_tilde(&data.y, &scores, 1e12).unwrap();

    let mut d0 = Array2::<f64>::zeros((2, 2));
    let mut d0_check = Array2::<f64>::zeros((2, 2));
    for i in 0..n {
        let row: Vec<f64> = data.x.row(i).to_vec();
        let v = gt.project(&row);
        d0 = d0 + fd_hessian(&gt.transfer, &v, 1e-4);
        d0_check = d0_check + fd_hessian(&gt.transfer, &v, 5e-5);
    }
    d0.mapv_inplace(|x| x / n as f64);
    d0_check.mapv_inplace(|x| x / n as f64);
    // Richardson step-halving agreement for the Hessian oracle
    let fd_agreement = linalg::fro_dist(&d0, &d0_check);
    assert!(fd_agreement <= 1e-5, "finite-difference steps disagree by {fd_agreement:.2e}");

    let target = gt.beta.dot(&d0).dot(&gt.beta.t());
    let rel = linalg::fro_dist(&sigma, &target) / linalg::fro_norm(&target);
    let secs = started.elapsed().as_secs_f64();
    assert!(rel <= 0.2, "relative Frobenius error {rel:.3} above 0.2");
    assert!(secs < 60.0, "stein identity took {secs:.1}s (budget 60s)");
    println!("ACCEPTANCE stein-identity: PASS (rel err {rel:.3}, fd agreement {fd_agreement:.1e}, {secs:.1}s)");
}

/// Spherical-cap quadrature spot value used by the coverage bound.
#[test]
fn cap_fraction_circle_third() {
    let f = cap_fraction(2, 1.0, 1.0).unwrap();
    assert!((f - 1.0 / 3.0).abs() < 1e-9, "cap fraction {f} vs 1/3");
    println!("ACCEPTANCE cap-fraction-third: PASS ({f:.12})");
}

/// Subspace recovery trend under the moment-bound schedules: the median
/// rotation-invariant error shrinks with n and lands below 0.5 absolute.
#[test]
fn subspace_recovery_trend() {
    let started = std::time::Instant::now();
    let constants = ModelConstants::desk_default(30, 1, 2);
    let mut medians = Vec::new();
    for &n in &[500usize, 5000] {
        let (tau, lambda) = theory_params(constants.theta, n, 30).unwrap();
        let mut dists = Vec::new();
        for seed in 0..5u64 {
            let gt = make_ground_truth(&constants, 100 + seed).unwrap();
            let data = sample_dataset(&gt, n, 200 + seed).unwrap();
            let q = estimate_q(&data, tau, lambda, &SdpConfig::default()).unwrap();
            dists.push(procrustes_dist(&q.q, &gt.q_star).unwrap());
        }
        medians.push(median(&mut dists));
    }
    let secs = started.elapsed().as_secs_f64();
    assert!(
        medians[1] < medians[0],
        "median at n=5000 ({}) not below n=500 ({})",
        medians[1],
        medians[0]
    );
    assert!(medians[1] < 0.5, "median at n=5000 is {} (needs < 0.5)", medians[1]);
    assert!(secs < 300.0, "subspace trend took {secs:.1}s (budget 300s)");
    println!(
        "ACCEPTANCE subspace-trend: PASS (medians {:.3} @ n=500, {:.3} @ n=5000, {secs:.1}s)",
        medians[0], medians[1]
    );
}

/// End-to-end consistency trend: the median Monte-Carlo L2 loss of the full
/// pipeline shrinks with n and is small in absolute terms at n=2000.
#[test]
fn end_to_end_consistency_trend() {
    let started = std::time::Instant::now();
    let constants = ModelConstants::desk_default(8, 1, 1);
    assert_eq!(constants.eta, 0.1);
    let mut medians = Vec::new();
    for &n in &[200usize, 2000] {
        let mut losses = Vec::new();
        for seed in 0..5u64 {
            let gt = make_ground_truth(&constants, 300 + seed).unwrap();
            let data = sample_dataset(&gt, n, 400 + seed).unwrap();
            let cfg = FitConfig::new(32, 500 + seed, FitMode::Step);
            let fit = fit_mmi(&data, &cfg).unwrap();
            let pred = fit.predictor().unwrap();
            let l2 =
                l2_loss_mc(&|x: &[f64]| pred.predict(x), &gt, 50_000, 600 + seed).unwrap();
            losses.push(l2);
        }
        medians.push(median(&mut losses));
    }
    let secs = started.elapsed().as_secs_f64();
    let b2 = constants.b * constants.b;
    assert!(
        medians[1] < medians[0],
        "median at n=2000 ({}) not below n=200 ({})",
        medians[1],
        medians[0]
    );
    assert!(
        medians[1] <= 0.05 * b2,
        "median at n=2000 is {} (needs <= {})",
        medians[1],
        0.05 * b2
    );
    assert!(secs < 600.0, "e2e trend took {secs:.1}s (budget 600s)");
    println!(
        "ACCEPTANCE e2e-trend: PASS (medians {:.5} @ n=200, {:.5} @ n=2000, {secs:.1}s)",
        medians[0], medians[1]
    );
}

/// Interpolant properties: monotonicity, the Lipschitz bound, and exact
/// anchor interpolation, on 10^5 random pairs each.
#[test]
fn interpolant_properties() {
    // anchors from a real fit so the check covers the production path
    let constants = ModelConstants::desk_default(6, 2, 3);
    let gt = make_ground_truth(&constants, 9).unwrap();
    let data = sample_dataset(&gt, 60, 10).unwrap();
    let iso = sparse_isotonic(&data.x, &data.y, &gt.beta, 3, constants.b, DEFAULT_ENUM_BUDGET)
        .unwrap();
    let step = step_interpolant(&iso);
    let lip_fit = lipschitz_sparse_fit(
        &data.x,
        &data.y,
        &gt.beta,
        3,
        constants.b,
        DEFAULT_ENUM_BUDGET,
        1e-11,
    )
    .unwrap();
    let lip = lipschitz_interpolant(&lip_fit.anchors, constants.b).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let span = 1.5;
    let mut step_monotone_violations = 0usize;
    let mut lip_monotone_violations = 0usize;
    let mut lip_lipschitz_violations = 0usize;
    for _ in 0..100_000 {
        let lo: Vec<f64> = (0..2).map(|_| rng.gen_range(-span..span)).collect();
        let hi: Vec<f64> = lo.iter().map(|&v| v + rng.gen_range(0.0..span)).collect();
        if step.eval(&lo) > step.eval(&hi) {
            step_monotone_violations += 1;
        }
        if lip.eval(&lo) > lip.eval(&hi) + 1e-9 {
            lip_monotone_violations += 1;
        }
        let a: Vec<f64> = (0..2).map(|_| rng.gen_range(-span..span)).collect();
        let c: Vec<f64> = (0..2).map(|_| rng.gen_range(-span..span)).collect();
        let dist: f64 = a.iter().zip(&c).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt();
        if (lip.eval(&a) - lip.eval(&c)).abs() > dist + 1e-9 {
            lip_lipschitz_violations += 1;
        }
    }
    assert_eq!(step_monotone_violations, 0, "step interpolant monotonicity violated");
    assert_eq!(lip_monotone_violations, 0, "lipschitz interpolant monotonicity violated");
    assert_eq!(lip_lipschitz_violations, 0, "lipschitz constant violated");

    // exact anchor interpolation
    for (anchor, value) in step.anchors() {
        assert_eq!(step.eval(anchor), *value, "step interpolant misses an anchor");
    }
    for (anchor, value) in lip.anchors() {
        assert!(
            (lip.eval(anchor) - value).abs() <= 1e-12,
            "lipschitz interpolant misses an anchor"
        );
    }
    // range checks
    for _ in 0..10_000 {
        let v: Vec<f64> = (0..2).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let s = step.eval(&v);
        let l = lip.eval(&v);
        assert!((0.0..=constants.b).contains(&s));
        assert!((0.0..=constants.b).contains(&l));
    }
    println!("ACCEPTANCE interpolant-properties: PASS (10^5 pairs, zero violations)");
}

/// The loss-gap and direct-distance Monte-Carlo estimators agree within
/// three standard errors for three distinct candidate functions.
#[test]
fn norm_integral_equivalence() {
    let constants = ModelConstants::desk_default(5, 1, 2);
    let gt = make_ground_truth(&constants, 31).unwrap();

    let scaled = {
        let gt = gt.clone();
        move |x: &[f64]| 0.8 * gt.truth_value(x) + 0.03
    };
    let constant = |_: &[f64]| 0.3;
    let data = sample_dataset(&gt, 40, 32).unwrap();
    let iso = sparse_isotonic(&data.x, &data.y, &gt.beta, 2, constants.b, DEFAULT_ENUM_BUDGET)
        .unwrap();
    let step = step_interpolant(&iso);
    let beta = gt.beta.clone();
    let fitted = move |x: &[f64]| {
        let v: Vec<f64> = (0..1)
            .map(|j| (0..5).map(|i| beta[[i, j]] * x[i]).sum())
            .collect();
        step.eval(&v)
    };

    let handles: Vec<(&str, Box<dyn Fn(&[f64]) -> f64 + Sync>)> = vec![
        ("scaled-truth", Box::new(scaled)),
        ("constant", Box::new(constant)),
        ("fitted-step", Box::new(fitted)),
    ];
    for (name, g) in &handles {
        let mc = mc_gap(g, &gt, 100_000, 33).unwrap();
        let tol = 3.0 * (mc.loss_gap_sigma + mc.l2_sq_sigma);
        assert!(
            (mc.loss_gap - mc.l2_sq).abs() <= tol,
            "{name}: gap {} vs l2 {} (tol {tol})",
            mc.loss_gap,
            mc.l2_sq
        );
    }
    println!("ACCEPTANCE norm-integral: PASS (3 handles at n_mc = 10^5)");
}

/// Sensitivity bound: for 20 random perturbations of the true factors the
/// measured loss gap stays below `z(ε₁, ε₂, C)` plus Monte-Carlo error.
#[test]
fn sensitivity_bound_holds() {
    let constants = ModelConstants::desk_default(6, 2, 3);
    let gt = make_ground_truth(&constants, 77).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    for trial in 0..20u64 {
        let scale = rng.gen_range(0.01..0.2);
        let mut qn = gt.q_star.clone();
        for v in qn.iter_mut() {
            *v += rng.gen_range(-scale..scale);
        }
        let (qn, _) = linalg::qr_thin(&qn).unwrap();
        let mut r = gt.r_star.clone();
        for v in r.iter_mut() {
            *v += rng.gen_range(-scale..scale);
        }
        for j in 0..2 {
            let norm: f64 = (0..2).map(|i| r[[i, j]] * r[[i, j]]).sum::<f64>().sqrt();
            for i in 0..2 {
                r[[i, j]] = r[[i, j]] / norm * gt.constants.r;
            }
        }
        let rep = sensitivity_check(&gt, &qn, &r, 20_000, 1000 + trial).unwrap();
        assert!(
            rep.lhs <= rep.rhs + 3.0 * rep.mc_sigma,
            "trial {trial}: lhs {} above z {} + 3sigma {}",
            rep.lhs,
            rep.rhs,
            rep.mc_sigma
        );
    }
    println!("ACCEPTANCE sensitivity-bound: PASS (20 perturbations)");
}
