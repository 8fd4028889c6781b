//! Acceptance suite: one test per criterion, each printing a single
//! pass/fail line (run with `--nocapture` to see them on success).
//!
//! The criteria are property- and regression-based: exact algebraic
//! identities at rounding level, bit-exact agreement with independent
//! brute-force oracles over the same finite cube families, and measured
//! constants that must be finite and stable under grid refinement.

#![allow(clippy::needless_range_loop)]

use std::time::Instant;

use local_hardy::atoms::{atomic_decompose, atomic_norm_upper, haar_atom, reconstruct, validate_atom};
use local_hardy::baseline::Baseline;
use local_hardy::config::{ExperimentConfig, ExperimentKind, GridSpec};
use local_hardy::corpus::standard_corpus;
use local_hardy::czd::{cz_decompose, verify_czd};
use local_hardy::experiment::run;
use local_hardy::family::CubeFamily;
use local_hardy::grid::{weighted_lp_norm, Grid, SampledFunction};
use local_hardy::maximal::{
    grand_maximal, hardy_quasi_norm, local_hl_maximal, make_dictionary, DictVariant,
    GrandMode,
};
use local_hardy::operators::{
    commutator_apply, commutator_apply_integrand, psdo_apply, strongly_singular_apply,
    StronglySingularKernel, Symbol,
};
use local_hardy::weights::{ap_loc_constant, bmo_loc_norm, HardyParams, Weight, WeightDescriptor};

fn verdict(criterion: u32, pass: bool, start: Instant, detail: &str) {
    let line = format!(
        "criterion {criterion}: {} ({:.1}s) {detail}",
        if pass { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
    println!("{line}");
    assert!(pass, "{line}");
}

fn sup_diff(a: &SampledFunction, b: &SampledFunction) -> f64 {
    a.values
        .iter()
        .zip(b.values.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// 1. Weight algebra: duality identity to 1e-10 relative, monotonicity exact
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_weight_algebra() {
    let start = Instant::now();
    let grid = Grid::new(1, 8.0, 1 << 10).unwrap();
    let fam = CubeFamily::local(1.0, &grid);
    let mut pass = true;
    let mut worst_dual = 0.0f64;
    for desc in ["exp:1", "powlog:1,1", "abspow:0.5"] {
        let w = WeightDescriptor::parse(desc).unwrap().sample(grid).unwrap();
        let mut prev = f64::INFINITY;
        for &p in &[1.5, 2.0, 4.0] {
            let c = ap_loc_constant(&w, p, 1.0, fam).unwrap().constant;
            // monotone non-increasing in p, exact up to rounding
            if c > prev * (1.0 + 1e-12) {
                pass = false;
            }
            prev = c;
            // duality over the same cube family
            let pp = p / (p - 1.0);
            let dual = w.pow(-1.0 / (p - 1.0));
            let lhs = ap_loc_constant(&dual, pp, 1.0, fam).unwrap().constant;
            let rhs = c.powf(pp - 1.0);
            let rel = (lhs - rhs).abs() / rhs;
            worst_dual = worst_dual.max(rel);
            if rel > 1e-10 {
                pass = false;
            }
        }
    }
    let took = start.elapsed().as_secs_f64();
    verdict(
        1,
        pass && took <= 30.0,
        start,
        &format!("worst duality deviation {worst_dual:.2e} over 3 weights x 3 exponents"),
    );
}

// ---------------------------------------------------------------------------
// 2. Bit-exact agreement with independent double-loop oracles at m = 256
// ---------------------------------------------------------------------------

#[test]
fn criterion_2_brute_force_oracles() {
    let start = Instant::now();
    let grid = Grid::new(1, 8.0, 256).unwrap();
    let h = grid.h();
    let mut pass = true;

    // independent A_p sweep: one cube at a time, fresh left-to-right sums
    let ap_oracle = |w: &Weight, p: f64, cap: f64| -> f64 {
        let sigma: Option<Vec<f64>> = if p > 1.0 {
            Some(w.values().iter().map(|v| v.powf(-1.0 / (p - 1.0))).collect())
        } else {
            None
        };
        let mut best = f64::NEG_INFINITY;
        for s in 1..=grid.m {
            if (s as f64 * h) > cap * (1.0 + 1e-12) {
                break;
            }
            for lo in 0..=(grid.m - s) {
                let mut sum_w = 0.0f64;
                for i in lo..lo + s {
                    sum_w += w.values()[i];
                }
                let q = match &sigma {
                    Some(sg) => {
                        let mut sum_s = 0.0f64;
                        for i in lo..lo + s {
                            sum_s += sg[i];
                        }
                        (sum_w / s as f64) * (sum_s / s as f64).powf(p - 1.0)
                    }
                    None => {
                        let mut mn = f64::INFINITY;
                        for i in lo..lo + s {
                            mn = mn.min(w.values()[i]);
                        }
                        (sum_w / s as f64) / mn
                    }
                };
                if q > best {
                    best = q;
                }
            }
        }
        best
    };
    let weights = ["const:1", "exp:1", "abspow:-0.5", "powlog:1,1", "abspow:0.5"];
    for (k, desc) in weights.iter().enumerate() {
        let w = WeightDescriptor::parse(desc).unwrap().sample(grid).unwrap();
        let p = if k % 2 == 0 { 2.0 } else { 1.0 };
        let fast = ap_loc_constant(&w, p, 1.0, CubeFamily::local(1.0, &grid)).unwrap().constant;
        let slow = ap_oracle(&w, p, 1.0);
        if fast != slow {
            pass = false;
            println!("  ap_loc mismatch for {desc}: {fast} vs {slow}");
        }
    }

    // BMO oracle
    let bmo_oracle = |b: &SampledFunction, cap: f64| -> f64 {
        let vals: Vec<f64> = b.values.iter().map(|v| v.re).collect();
        let mut best = 0.0f64;
        for s in 1..=grid.m {
            if (s as f64 * h) > cap * (1.0 + 1e-12) {
                break;
            }
            for lo in 0..=(grid.m - s) {
                let mut acc = 0.0f64;
                for i in lo..lo + s {
                    acc += vals[i];
                }
                let mean = acc / s as f64;
                let mut osc = 0.0f64;
                for i in lo..lo + s {
                    osc += (vals[i] - mean).abs();
                }
                best = best.max(osc / s as f64);
            }
        }
        best
    };
    let corpus = standard_corpus(grid, 7);
    for (name, f) in corpus.iter().take(5) {
        if bmo_loc_norm(f, 1.0) != bmo_oracle(f, 1.0) {
            pass = false;
            println!("  bmo mismatch for {name}");
        }
    }

    // local maximal oracle: per point, per cube
    let mloc_oracle = |f: &SampledFunction| -> Vec<f64> {
        let absf: Vec<f64> = f.values.iter().map(|v| v.norm()).collect();
        let mut out = vec![0.0f64; grid.m];
        for i in 0..grid.m {
            let mut s = 1usize;
            while (s as f64) * h < 1.0 && s <= grid.m {
                let lo_min = (i + 1).saturating_sub(s);
                let lo_max = i.min(grid.m - s);
                for lo in lo_min..=lo_max {
                    let mut acc = 0.0f64;
                    for j in lo..lo + s {
                        acc += absf[j];
                    }
                    let avg = acc / s as f64;
                    if avg > out[i] {
                        out[i] = avg;
                    }
                }
                s += 1;
            }
        }
        out
    };
    for (name, f) in corpus.iter().take(5) {
        let fast = local_hl_maximal(f);
        let slow = mloc_oracle(f);
        for i in 0..grid.m {
            if fast.values[i].re != slow[i] {
                pass = false;
                println!("  local maximal mismatch for {name} at cell {i}");
                break;
            }
        }
    }

    let took = start.elapsed().as_secs_f64();
    verdict(2, pass && took <= 60.0, start, "ap_loc, bmo, local maximal vs exhaustive oracles");
}

// ---------------------------------------------------------------------------
// 3. CZ reconstruction exact to rounding, supports cell-exact, window 100%
// ---------------------------------------------------------------------------

#[test]
fn criterion_3_cz_reconstruction() {
    let start = Instant::now();
    let grid = Grid::new(1, 8.0, 1 << 11).unwrap();
    let params = HardyParams::minimal(1.0, f64::INFINITY, 1.0, 1).unwrap();
    let dict = make_dictionary(params.n_grand, 1, 6, 2, DictVariant::Wide, 0.5, 8.0).unwrap();
    let corpus = standard_corpus(grid, 7);
    let mut pass = true;
    let mut worst = 0.0f64;
    let sqrt_n = 1.0f64;
    for (name, f) in &corpus {
        let mf = grand_maximal(f, &dict, GrandMode::NonTangential);
        let sup = mf.sup_norm();
        for frac in [0.3, 0.6] {
            let dec = cz_decompose(f, frac * sup, &params, &dict, 2).unwrap();
            let err = dec.reconstruction_error(f) / f.sup_norm();
            worst = worst.max(err);
            if err > 1e-10 {
                pass = false;
                println!("  reconstruction {err:.2e} for {name} at {frac}");
            }
            for i in 0..dec.n_cubes() {
                // support discipline: bad part vanishes off the a-dilate
                let bar = dec.cover.q_bar(i);
                for (idx, v) in dec.bad[i].cells(&grid) {
                    if v != 0.0 && !bar.contains(&grid.coord(idx), 1) {
                        pass = false;
                    }
                }
                // the proportionality window, re-checked from the outside
                let c = &dec.cover.cubes[i];
                let diam = c.cube.side * sqrt_n;
                let win = dec.cover.window;
                if !(win.low * diam <= c.dist && c.dist <= win.high * diam * (1.0 + 1e-12)) {
                    pass = false;
                    println!("  window violated for {name}: side {} dist {}", c.cube.side, c.dist);
                }
            }
        }
    }
    let took = start.elapsed().as_secs_f64();
    verdict(
        3,
        pass && took <= 120.0,
        start,
        &format!("worst relative reconstruction error {worst:.2e} over {} functions x 2 heights", corpus.len()),
    );
}

// ---------------------------------------------------------------------------
// 4. Atom validity at m = 2^11, residual behavior under refinement
// ---------------------------------------------------------------------------

#[test]
fn criterion_4_atom_validity() {
    let start = Instant::now();
    let params = HardyParams::minimal(1.0, f64::INFINITY, 1.0, 1).unwrap();
    let run_at = |m: usize| -> (usize, usize, f64) {
        let grid = Grid::new(1, 8.0, m).unwrap();
        let w = Weight::exponential(grid, 1.0);
        let dict = make_dictionary(params.n_grand, 1, 6, 2, DictVariant::Wide, 0.5, 8.0).unwrap();
        let corpus = standard_corpus(grid, 7);
        let mut total = 0usize;
        let mut failures = 0usize;
        let mut worst_moment = 0.0f64;
        for (_, f) in corpus.iter().take(4) {
            let dec = atomic_decompose(f, &w, &params, &dict, None).unwrap();
            for t in dec.terms.iter().chain(dec.single.iter()) {
                let rep = validate_atom(&t.atom, &w);
                total += 1;
                if !rep.pass || rep.worst_moment_residual > 1e-6 {
                    failures += 1;
                }
                worst_moment = worst_moment.max(rep.worst_moment_residual);
            }
        }
        (total, failures, worst_moment)
    };
    let (n11, fail11, res11) = run_at(1 << 11);
    let (n12, fail12, res12) = run_at(1 << 12);
    // the construction cancels discrete moments at solver precision, so
    // both residuals sit at the rounding floor; "decreases" is meaningful
    // only above it
    let noise_floor = 1e-10;
    let decreases = res12 <= res11 || res12 <= noise_floor;
    let pass = fail11 == 0 && fail12 == 0 && res11 <= 1e-6 && decreases && n11 > 0;
    verdict(
        4,
        pass,
        start,
        &format!(
            "{n11} atoms at 2^11 (worst moment residual {res11:.2e}), {n12} at 2^12 ({res12:.2e}), failures {fail11}/{fail12}"
        ),
    );
}

// ---------------------------------------------------------------------------
// 5. Atomic reconstruction over the ten-member corpus, two parameter sets
// ---------------------------------------------------------------------------

#[test]
fn criterion_5_atomic_reconstruction() {
    let start = Instant::now();
    let grid = Grid::new(1, 8.0, 1 << 10).unwrap();
    let corpus = standard_corpus(grid, 7);
    let mut pass = true;
    let mut worst = 0.0f64;
    let cases = [
        ("exp:1", HardyParams::new(1.0, f64::INFINITY, 0, 2, 1.0, 1).unwrap()),
        ("const:1", HardyParams::new(2.0 / 3.0, f64::INFINITY, 1, 3, 1.0, 1).unwrap()),
    ];
    for (wdesc, params) in &cases {
        let w = WeightDescriptor::parse(wdesc).unwrap().sample(grid).unwrap();
        let dict = make_dictionary(params.n_grand, 1, 6, 2, DictVariant::Wide, 0.5, 8.0).unwrap();
        for (name, f) in &corpus {
            let dec = atomic_decompose(f, &w, params, &dict, None).unwrap();
            let rec = reconstruct(&dec);
            let err = sup_diff(f, &rec) / f.sup_norm();
            worst = worst.max(err);
            if err > 1e-8 {
                pass = false;
                println!("  {wdesc} p={} {name}: reconstruction {err:.2e}", params.p);
            }
        }
    }
    verdict(
        5,
        pass,
        start,
        &format!("worst relative reconstruction error {worst:.2e} over 10 functions x 2 parameter sets"),
    );
}

// ---------------------------------------------------------------------------
// 6. Norm equivalence band and its refinement stability
// ---------------------------------------------------------------------------

#[test]
fn criterion_6_norm_equivalence() {
    let start = Instant::now();
    let params = HardyParams::minimal(1.0, f64::INFINITY, 1.0, 1).unwrap();
    let band_at = |m: usize| -> (f64, f64) {
        let grid = Grid::new(1, 8.0, m).unwrap();
        let w = Weight::exponential(grid, 1.0);
        let wide = make_dictionary(params.n_grand, 1, 6, 2, DictVariant::Wide, 0.5, 8.0).unwrap();
        let central = make_dictionary(params.n_grand, 1, 6, 2, DictVariant::Central, 0.5, 8.0).unwrap();
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for (_, f) in standard_corpus(grid, 7) {
            let dec = atomic_decompose(&f, &w, &params, &wide, None).unwrap();
            let upper = atomic_norm_upper(&dec, params.p);
            let hardy = hardy_quasi_norm(&f, &w, &params, &central).unwrap();
            if hardy > 0.0 {
                let r = upper / hardy;
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
        (lo, hi)
    };
    let (lo10, hi10) = band_at(1 << 10);
    let (lo11, hi11) = band_at(1 << 11);
    let spread10 = hi10 / lo10;
    let lo_drift = (lo11 - lo10).abs() / lo10.min(lo11);
    let hi_drift = (hi11 - hi10).abs() / hi10.min(hi11);
    let took = start.elapsed().as_secs_f64();
    let pass = spread10 <= 100.0 && lo_drift <= 0.25 && hi_drift <= 0.25 && took <= 600.0;
    verdict(
        6,
        pass,
        start,
        &format!(
            "band [{lo10:.1}, {hi10:.1}] spread {spread10:.2}, endpoint drift {:.1}%/{:.1}%",
            lo_drift * 100.0,
            hi_drift * 100.0
        ),
    );
}

// ---------------------------------------------------------------------------
// 7. Decomposition diagnostics: finite, drift-bounded, correct decay
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_czd_diagnostics() {
    let start = Instant::now();
    let params = HardyParams::minimal(1.0, f64::INFINITY, 1.0, 1).unwrap();
    let diag_at = |m: usize| -> (f64, f64, f64) {
        let grid = Grid::new(1, 8.0, m).unwrap();
        let w = Weight::exponential(grid, 1.0);
        let dict = make_dictionary(params.n_grand, 1, 6, 2, DictVariant::Wide, 0.5, 8.0).unwrap();
        let corpus = standard_corpus(grid, 7);
        let mut c2 = 0.0f64;
        let mut c3 = 0.0f64;
        let mut slopes = Vec::new();
        for (_, f) in corpus.iter().take(4) {
            let mf = grand_maximal(f, &dict, GrandMode::NonTangential);
            for frac in [0.3, 0.6] {
                let dec = cz_decompose(f, frac * mf.sup_norm(), &params, &dict, 2).unwrap();
                let d = verify_czd(&dec, f, &w, &dict);
                c2 = c2.max(d.c2_star);
                c3 = c3.max(d.c3_star);
                if d.decay_slope != 0.0 {
                    slopes.push(d.decay_slope);
                }
            }
        }
        let slope = slopes.iter().sum::<f64>() / slopes.len().max(1) as f64;
        (c2, c3, slope)
    };
    let (c2a, c3a, slope_a) = diag_at(1 << 10);
    let (c2b, c3b, slope_b) = diag_at(1 << 11);
    let c2_drift = (c2a - c2b).abs() / c2a.min(c2b);
    let c3_drift = (c3a - c3b).abs() / c3a.min(c3b);
    // decay target: -(n + s + 1) + 0.5 with n = 1, s = 0
    let target = -(1.0 + params.s as f64 + 1.0) + 0.5;
    let pass = c2a.is_finite()
        && c3a.is_finite()
        && c2_drift <= 0.20
        && c3_drift <= 0.20
        && slope_a <= target
        && slope_b <= target;
    verdict(
        7,
        pass,
        start,
        &format!(
            "C2* {c2a:.2}->{c2b:.2} ({:.0}%), C3* {c3a:.2}->{c3b:.2} ({:.0}%), decay slope {slope_a:.2}/{slope_b:.2} vs target {target}",
            c2_drift * 100.0,
            c3_drift * 100.0
        ),
    );
}

// ---------------------------------------------------------------------------
// 8. Operators: dual commutator forms, degenerations, atom boundedness
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_operators() {
    let start = Instant::now();
    let mut pass = true;
    let grid = Grid::new(1, 8.0, 1 << 11).unwrap();
    let kernel = StronglySingularKernel::new(1.0, 1).unwrap();
    let f = SampledFunction::from_real_fn(grid, |x| {
        let u = x[0] / 1.5;
        if u.abs() < 1.0 { (-1.0 / (1.0 - u * u)).exp() } else { 0.0 }
    });

    // commutator dual-formula agreement
    let b = SampledFunction::from_real_fn(grid, |x| (2.0 * x[0]).sin());
    let c1 = commutator_apply(&b, &f, &kernel).unwrap();
    let c2 = commutator_apply_integrand(&b, &f, &kernel).unwrap();
    let agree = sup_diff(&c1, &c2) / c2.sup_norm();
    if agree > 1e-10 {
        pass = false;
        println!("  commutator forms deviate by {agree:.2e}");
    }

    // [const, T] = 0
    let bc = SampledFunction::from_real_fn(grid, |_| 4.2);
    let cz = commutator_apply(&bc, &f, &kernel).unwrap();
    let tf_scale = strongly_singular_apply(&f, &kernel).unwrap().sup_norm();
    if cz.sup_norm() > 1e-12 * tf_scale {
        pass = false;
        println!("  [const, T] = {:.2e}", cz.sup_norm());
    }

    // identity-symbol round trip
    let round = psdo_apply(&f, &Symbol::Identity);
    let ident_err = sup_diff(&f, &round) / f.sup_norm();
    if ident_err > 1e-10 {
        pass = false;
        println!("  psdo identity round-trip {ident_err:.2e}");
    }

    // atom test: sup over 20 atoms of ||Ta||_{L^1_w} with <= 25% drift,
    // using the resolved diagonal rule so refinement compares the same
    // principal value rather than unresolved oscillation noise
    let atom_sup_at = |m: usize| -> f64 {
        let g = Grid::new(1, 8.0, m).unwrap();
        let w = Weight::exponential(g, 1.0);
        let k = StronglySingularKernel::resolved(1.0, 1).unwrap();
        let mut sup = 0.0f64;
        for i in 0..20 {
            let t = i as f64 / 19.0;
            let center = -1.5 + 3.0 * t;
            let side = 0.25 + 1.6 * ((i % 5) as f64) / 4.0;
            let a = haar_atom(g, &w, center, side, 1.0).unwrap();
            let ta = strongly_singular_apply(&a.as_dense(), &k).unwrap();
            let norm = weighted_lp_norm(&ta, &w, 1.0).unwrap();
            sup = sup.max(norm);
        }
        sup
    };
    let s11 = atom_sup_at(1 << 11);
    let s12 = atom_sup_at(1 << 12);
    let drift = (s11 - s12).abs() / s11.min(s12);
    if !(s11.is_finite() && drift <= 0.25) {
        pass = false;
        println!("  atom test sup {s11:.3} -> {s12:.3}, drift {:.0}%", drift * 100.0);
    }

    let took = start.elapsed().as_secs_f64();
    verdict(
        8,
        pass && took <= 300.0,
        start,
        &format!(
            "dual-form {agree:.1e}, identity {ident_err:.1e}, atom sup {s11:.2}->{s12:.2} ({:.1}% drift)",
            drift * 100.0
        ),
    );
}

// ---------------------------------------------------------------------------
// 9. Regression harness: frozen baselines reproduce, identical bytes
// ---------------------------------------------------------------------------

#[test]
fn criterion_9_regression_harness() {
    let start = Instant::now();
    let dir = std::env::temp_dir().join("local-hardy-acceptance");
    std::fs::create_dir_all(&dir).unwrap();
    let bpath = dir.join("baseline.json");
    std::fs::remove_file(&bpath).ok();

    let mut pass = true;
    for kind in [ExperimentKind::WeightsCheck, ExperimentKind::Atomic] {
        let cfg = ExperimentConfig {
            kind: Some(kind),
            grid: GridSpec { n: 1, half_width: 8.0, m: 256 },
            baseline: Some(bpath.to_string_lossy().into_owned()),
            corpus: local_hardy::corpus::CorpusSpec {
                names: vec!["tent".into(), "bump".into()],
                random: 1,
                seed: 7,
                radius: 1.5,
            },
            ..Default::default()
        };
        let first = run(&cfg).unwrap();
        let second = run(&cfg).unwrap();
        // byte-identical artifacts
        let j1 = serde_json::to_string(&first.summary).unwrap();
        let j2 = serde_json::to_string(&second.summary).unwrap();
        if j1 != j2 {
            pass = false;
            println!("  {kind:?}: summaries differ");
        }
        for ((n1, t1), (_, t2)) in first.csv.iter().zip(second.csv.iter()) {
            if t1.render() != t2.render() {
                pass = false;
                println!("  {kind:?}: csv {n1} differs");
            }
        }
        // the second run compared against the frozen baseline and passed
        if second.baseline_lines.iter().any(|l| l.contains("frozen under")) {
            pass = false;
            println!("  {kind:?}: baseline was not reused");
        }
        // tampering with the baseline must trip the comparison
        let mut tampered = Baseline::load(&bpath).unwrap();
        if let Some(slot) = tampered.entries.get_mut(&first.fingerprint) {
            for entry in slot.values_mut() {
                entry.value *= 3.0;
                entry.value += 1.0;
            }
        }
        tampered.save(&bpath).unwrap();
        match run(&cfg) {
            Err(local_hardy::error::Error::Regression(_)) => {}
            Err(e) => {
                pass = false;
                println!("  {kind:?}: unexpected error on tampered baseline: {e}");
            }
            Ok(_) => {
                pass = false;
                println!("  {kind:?}: tampered baseline not detected");
            }
        }
        std::fs::remove_file(&bpath).ok();
    }
    std::fs::remove_dir_all(&dir).ok();
    verdict(9, pass, start, "byte-identical artifacts, frozen constants reproduce, tampering detected");
}
