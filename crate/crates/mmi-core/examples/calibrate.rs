//! Scratch calibration runs for the acceptance criteria (dev tool).

use mmi_core::linalg;
use mmi_core::model::{make_ground_truth, sample_dataset, ModelConstants, Transfer};
use mmi_core::pipeline::{fit_mmi, l2_loss_mc, procrustes_dist, FitConfig, FitMode};
use mmi_core::sdp::{estimate_q, SdpConfig};
use mmi_core::stein::{sigma_tilde, ScoreTable};
use mmi_core::theory::theory_params;
use ndarray::Array2;

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

fn stein_identity_check() {
    let constants = ModelConstants::new(6, 2, 3, 1.0, 1.0, 1.0, 0.1);
    let gt = make_ground_truth(&constants, 1).unwrap();
    let n = 100_000;
    let data = sample_dataset(&gt, n, 2).unwrap();
    let scores = ScoreTable::from_covariates(&data.x, constants.c).unwrap();
    let sigma = sigma_tilde(&data.y, &scores, 1e12).unwrap();

    // FD Hessian of the transfer at the projected points
    let mut d0 = Array2::<f64>::zeros((2, 2));
    for i in 0..n {
        let row: Vec<f64> = data.x.row(i).to_vec();
        let v = gt.project(&row);
        d0 = d0 + fd_hessian(&gt.transfer, &v, 1e-4);
    }
    d0.mapv_inplace(|x| x / n as f64);
    let target = gt.beta.dot(&d0).dot(&gt.beta.t());
    let rel = linalg::fro_dist(&sigma, &target) / linalg::fro_norm(&target);
    println!(
        "stein identity: rel err {rel:.4}  (||target|| = {:.4}, ||sigma|| = {:.4})",
        linalg::fro_norm(&target),
        linalg::fro_norm(&sigma)
    );
}

fn subspace_trend() {
    let constants = ModelConstants::desk_default(30, 1, 2);
    println!("subspace: theta = {:.4}", constants.theta);
    for &n in &[500usize, 5000] {
        let (tau, lambda) = theory_params(constants.theta, n, 30).unwrap();
        let mut dists = Vec::new();
        for seed in 0..5u64 {
            let gt = make_ground_truth(&constants, 100 + seed).unwrap();
            let data = sample_dataset(&gt, n, 200 + seed).unwrap();
            let q = estimate_q(&data, tau, lambda, &SdpConfig::default()).unwrap();
            let dist = procrustes_dist(&q.q, &gt.q_star).unwrap();
            dists.push(dist);
        }
        dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
        println!(
            "subspace n={n}: tau={tau:.3} lambda={lambda:.4} dists={:?} median={:.4}",
            dists.iter().map(|d| (d * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
            dists[2]
        );
    }
}

fn e2e_trend() {
    let constants = ModelConstants::desk_default(8, 1, 1);
    for &n in &[200usize, 2000] {
        let mut losses = Vec::new();
        for seed in 0..5u64 {
            let gt = make_ground_truth(&constants, 300 + seed).unwrap();
            let data = sample_dataset(&gt, n, 400 + seed).unwrap();
            let cfg = FitConfig::new(32, 500 + seed, FitMode::Step);
            let fit = fit_mmi(&data, &cfg).unwrap();
            let pred = fit.predictor().unwrap();
            let l2 = l2_loss_mc(&|x: &[f64]| pred.predict(x), &gt, 50_000, 600 + seed).unwrap();
            losses.push((l2, fit.support.clone(), gt.support.clone(), fit.sdp_converged));
        }
        losses.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        println!("e2e n={n}:");
        for (l2, sup, true_sup, conv) in &losses {
            println!("  l2={l2:.5} support={sup:?} true={true_sup:?} sdp_conv={conv}");
        }
        println!("  median = {:.5}", losses[2].0);
    }
}

fn sigma_diag() {
    let constants = ModelConstants::desk_default(30, 1, 2);
    for &n in &[5000usize] {
        let (tau, lambda) = theory_params(constants.theta, n, 30).unwrap();
        for seed in 0..3u64 {
            let gt = make_ground_truth(&constants, 100 + seed).unwrap();
            let data = sample_dataset(&gt, n, 200 + seed).unwrap();
            let scores = ScoreTable::from_covariates(&data.x, constants.c).unwrap();
            let sigma = sigma_tilde(&data.y, &scores, tau).unwrap();
            let i = gt.support[0];
            let j = gt.support[1];
            let mut max_noise_off: f64 = 0.0;
            let mut max_noise_diag: f64 = 0.0;
            let mut diag_mean = 0.0;
            for a in 0..30 {
                diag_mean += sigma[[a, a]] / 30.0;
                for b in 0..30 {
                    let in_block = (a == i || a == j) && (b == i || b == j);
                    if !in_block && a != b {
                        max_noise_off = max_noise_off.max(sigma[[a, b]].abs());
                    }
                }
            }
            for a in 0..30 {
                if a != i && a != j {
                    max_noise_diag = max_noise_diag.max((sigma[[a, a]] - diag_mean).abs());
                }
            }
            println!(
                "seed {seed}: beta=({:.3},{:.3}) lambda={lambda:.3} tau2={:.1} block=[{:.3} {:.3}; {:.3}] diag_mean={diag_mean:.3} noise_off={max_noise_off:.3} noise_diag_dev={max_noise_diag:.3}",
                gt.beta[[i, 0]], gt.beta[[j, 0]],
                tau * tau,
                sigma[[i, i]] - diag_mean, sigma[[i, j]], sigma[[j, j]] - diag_mean,
            );
        }
    }
}

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "all".into());
    if which == "stein" || which == "all" {
        stein_identity_check();
    }
    if which == "subspace" || which == "all" {
        subspace_trend();
    }
    if which == "e2e" || which == "all" {
        e2e_trend();
    }
    if which == "sigma" {
        sigma_diag();
    }
}
