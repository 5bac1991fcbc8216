//! Reduced-size self-checks covering the same ground as the acceptance
//! suite, cheap enough to run on every install. Each check reports the
//! residual it measured so regressions show up as numbers, not just flags.

use crate::attack_models::{
    build_channel, phase_bound_saturating_channel, random_channel, ChannelModel,
};
use crate::error_analysis::{check_relations, error_rates_exact, error_rates_formula};
use crate::gf2_codes::{named_code, refresh_base, BitString};
use crate::protocol::{
    qubit_error_probability, run_reuse_loop, run_session, run_session_with_injected_errors,
    QubitPrep, ReuseSizing, SessionConfig,
};
use crate::rate_theory::{base_rate, key_threshold, rate_curve, total_key_ratio, TotalKeyRatio};
use crate::rng::Rng;
use std::collections::BTreeSet;

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome {
        name,
        passed,
        detail,
    }
}

/// Runs every self-check; the report is stable across runs.
pub fn run_all() -> Vec<CheckOutcome> {
    let mut out = Vec::new();

    // formula vs exact block simulation, plus the three relations
    {
        let mut max_gap: f64 = 0.0;
        let mut max_base_bit: f64 = 0.0;
        let mut max_ph_residual: f64 = 0.0;
        let mut min_slack = f64::INFINITY;
        let mut ok = true;
        for seed in 0..150u64 {
            let ch = match random_channel(seed, 1 + (seed as usize) % 4) {
                Ok(ch) => ch,
                Err(e) => {
                    out.push(check(
                        "formula-vs-exact",
                        false,
                        format!("channel build failed: {e}"),
                    ));
                    ok = false;
                    break;
                }
            };
            let (f, x) = match (error_rates_formula(&ch), error_rates_exact(&ch)) {
                (Ok(f), Ok(x)) => (f, x),
                _ => {
                    out.push(check(
                        "formula-vs-exact",
                        false,
                        "rate computation failed".into(),
                    ));
                    ok = false;
                    break;
                }
            };
            max_gap = max_gap.max(f.max_abs_diff(&x));
            max_base_bit = max_base_bit.max(f.e_bit_base).max(x.e_bit_base);
            let rel = check_relations(&x);
            max_ph_residual = max_ph_residual.max(rel.ph_eq_bit_residual);
            min_slack = min_slack.min(rel.ph_base_slack);
        }
        if ok {
            out.push(check(
                "formula-vs-exact",
                max_gap <= 1e-9,
                format!("max componentwise gap {max_gap:.3e} over 150 random channels"),
            ));
            out.push(check(
                "base-bit-error-zero",
                max_base_bit <= 1e-12,
                format!("max e_bit_base {max_base_bit:.3e}"),
            ));
            out.push(check(
                "phase-equals-bit",
                max_ph_residual <= 1e-9,
                format!("max |e_ph_comm - e_bit_comm| {max_ph_residual:.3e}"),
            ));
            out.push(check(
                "phase-base-bound",
                min_slack >= -1e-9,
                format!("min slack 2 e_bit_comm - e_ph_base = {min_slack:.3e}"),
            ));
        }
    }

    // the saturating family achieves the bound
    {
        let mut worst: f64 = 0.0;
        for &d2 in &[0.01, 0.05, 0.1] {
            let ch = phase_bound_saturating_channel(d2).expect("family in range");
            let rates = error_rates_formula(&ch).expect("valid channel");
            worst = worst.max((rates.e_ph_base - 2.0 * rates.e_bit_comm).abs());
        }
        out.push(check(
            "bound-saturation",
            worst <= 1e-9,
            format!("max |e_ph_base - 2 e_bit_comm| {worst:.3e} on the saturating family"),
        ));
    }

    // named channel analytics
    {
        let mut worst: f64 = 0.0;
        for &p in &[0.1, 0.2, 0.4] {
            for model in [ChannelModel::Depolarizing(p), ChannelModel::BitFlip(p)] {
                let ch = build_channel(&model).expect("valid model");
                let rates = error_rates_formula(&ch).expect("valid channel");
                worst = worst.max((rates.e_bit_comm - p / 2.0).abs());
            }
        }
        let mut worst_ir: f64 = 0.0;
        for model in [
            ChannelModel::InterceptResendZ,
            ChannelModel::InterceptResendRandom,
        ] {
            let ch = build_channel(&model).expect("valid model");
            let rates = error_rates_formula(&ch).expect("valid channel");
            worst_ir = worst_ir.max((rates.e_bit_comm - 0.25).abs());
        }
        out.push(check(
            "named-channel-rates",
            worst <= 1e-9 && worst_ir <= 1e-12,
            format!("flip-family residual {worst:.3e}, intercept-resend residual {worst_ir:.3e}"),
        ));
    }

    // thresholds
    {
        let kt = key_threshold();
        let rb25 = base_rate(0.25).expect("in domain");
        out.push(check(
            "thresholds",
            kt > 0.1099 && kt < 0.1101 && rb25.abs() <= 1e-12,
            format!("key threshold {kt:.6}, R_b(0.25) = {rb25:.3e}"),
        ));
    }

    // rate curves
    {
        let grid = rate_curve(0.0, 0.25, 0.005).expect("valid grid");
        let monotone = grid
            .windows(2)
            .all(|w| w[1].r_k < w[0].r_k && w[1].r_b < w[0].r_b);
        let dominance = grid.iter().all(|p| p.r_b >= p.r_k - 1e-12);
        let endpoints = grid[0].lk_over_2n.is_unbounded()
            && grid
                .iter()
                .filter(|p| p.e >= key_threshold())
                .all(|p| p.lk_over_2n == TotalKeyRatio::Finite(0.0));
        out.push(check(
            "rate-curves",
            monotone && dominance && endpoints,
            format!(
                "51 points: monotone {monotone}, R_b >= R_k {dominance}, endpoints {endpoints}"
            ),
        ));
    }

    // prepare-and-measure view agrees with the block view
    {
        let mut worst: f64 = 0.0;
        for model in [
            ChannelModel::Identity,
            ChannelModel::BitFlip(0.2),
            ChannelModel::PhaseFlip(0.3),
            ChannelModel::Depolarizing(0.1),
            ChannelModel::InterceptResendZ,
            ChannelModel::InterceptResendRandom,
        ] {
            let ch = build_channel(&model).expect("valid model");
            let mut avg = 0.0;
            for base in 0..2u8 {
                for value in 0..2u8 {
                    avg += qubit_error_probability(
                        QubitPrep {
                            base_bit: base,
                            value_bit: value,
                        },
                        &ch,
                    )
                    .expect("valid prep");
                }
            }
            avg /= 4.0;
            let block = error_rates_formula(&ch).expect("valid channel").e_bit_comm;
            worst = worst.max((avg - block).abs());
        }
        out.push(check(
            "prep-measure-consistency",
            worst <= 1e-9,
            format!("max |prep average - block e_bit_comm| {worst:.3e}"),
        ));
    }

    // Monte Carlo concentration at reduced size
    {
        let n = 1998;
        let expected = 0.05;
        let bound = 4.0 * (expected * (1.0 - expected) / n as f64).sqrt();
        let mut worst: f64 = 0.0;
        let mut ok = true;
        for seed in 0..5u64 {
            let cfg = SessionConfig::new(n, ChannelModel::Depolarizing(0.1), seed);
            match run_session(&cfg) {
                Ok(r) => worst = worst.max((r.observed_e - expected).abs()),
                Err(e) => {
                    ok = false;
                    out.push(check(
                        "error-estimation",
                        false,
                        format!("session failed: {e}"),
                    ));
                    break;
                }
            }
        }
        if ok {
            out.push(check(
                "error-estimation",
                worst <= bound,
                format!("max |observed - 0.05| = {worst:.5} (bound {bound:.5}) over 5 seeds"),
            ));
        }
    }

    // reconciliation soundness at reduced size
    {
        let mut ok = true;
        let mut detail = String::new();
        'outer: for seed in 0..5u64 {
            let cfg = SessionConfig::new(35, ChannelModel::Identity, seed);
            let clean = match run_session_with_injected_errors(&cfg, &BTreeSet::new()) {
                Ok(r) => r,
                Err(e) => {
                    ok = false;
                    detail = format!("session failed: {e}");
                    break;
                }
            };
            if clean.key_alice != clean.key_bob || clean.key_alice.len() != 5 {
                ok = false;
                detail = format!("clean run key length {}", clean.key_alice.len());
                break;
            }
            for pos in 0..35usize {
                let set: BTreeSet<usize> = [pos].into_iter().collect();
                let r = run_session_with_injected_errors(&cfg, &set).expect("valid run");
                if r.key_alice != r.key_bob {
                    ok = false;
                    detail = format!("seed {seed} position {pos}: keys differ");
                    break 'outer;
                }
            }
        }
        if ok {
            detail = "keys equal for all single-position injections, 5 seeds x 35 positions".into();
        }
        out.push(check("reconciliation", ok, detail));
    }

    // base-refresh algebra
    {
        let code = named_code("random:16:10:7").expect("named code");
        let mut ok = true;
        for msg in 0..(1u32 << 10) {
            let mut message = BitString::zeros(10);
            for i in 0..10 {
                message.set(i, ((msg >> i) & 1) as u8);
            }
            let cw = code.encode(&message).expect("encode");
            if refresh_base(&cw, &code).expect("refresh").weight() != 0 {
                ok = false;
                break;
            }
        }
        let mut seen = std::collections::HashSet::new();
        let mut rng = Rng::new(123);
        for _ in 0..20_000 {
            let b = BitString::random(16, &mut rng);
            let r = refresh_base(&b, &code).expect("refresh");
            if r.len() != 6 {
                ok = false;
                break;
            }
            seen.insert(r.to_string());
        }
        out.push(check(
            "base-refresh",
            ok && seen.len() == 64,
            format!("kernel collapses to zero, image size {}/64", seen.len()),
        ));
    }

    // reuse totals against the closed form
    {
        let e = 0.05;
        let cfg = SessionConfig::new(10_000, ChannelModel::Depolarizing(2.0 * e), 17);
        match run_reuse_loop(&cfg, 25, ReuseSizing::Idealized) {
            Ok(report) => {
                let closed = total_key_ratio(e)
                    .expect("in domain")
                    .finite()
                    .expect("finite at e > 0");
                let rel = (report.key_per_initial_base - closed).abs() / closed;
                out.push(check(
                    "reuse-totals",
                    rel < 0.01,
                    format!(
                        "measured {:.5} vs closed form {closed:.5} (relative {rel:.4})",
                        report.key_per_initial_base
                    ),
                ));
            }
            Err(e) => out.push(check("reuse-totals", false, format!("loop failed: {e}"))),
        }
    }

    // determinism
    {
        let cfg = SessionConfig::new(70, ChannelModel::Depolarizing(0.08), 5);
        let a = run_session(&cfg).expect("session");
        let b = run_session(&cfg).expect("session");
        let ra = run_reuse_loop(&cfg, 3, ReuseSizing::Coded).expect("reuse");
        let rb = run_reuse_loop(&cfg, 3, ReuseSizing::Coded).expect("reuse");
        out.push(check(
            "determinism",
            a == b && ra == rb,
            "identical configs reproduce identical transcripts and reports".to_string(),
        ));
    }

    out
}
