//! Batch experiment runner binding all modules together: corpus
//! generation, orchestration, deterministic artifacts, and baseline
//! management. The CLI is a thin wrapper over [`run`].

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::{json, Value};

use crate::atoms::{
    atomic_decompose, atomic_norm_upper, finite_decompose, haar_atom, reconstruct, validate_atom,
    AtomTerm,
};
use crate::baseline::{Baseline, DEFAULT_TOLERANCE};
use crate::config::{ExperimentConfig, ExperimentKind};
use crate::corpus::corpus_generate;
use crate::czd::{cz_decompose, verify_czd};
use crate::error::{Error, Result};
use crate::family::CubeFamily;
use crate::grid::weighted_lp_norm;
use crate::maximal::{
    grand_maximal, hardy_quasi_norm, local_hl_maximal, DictVariant, GrandMode,
};
use crate::operators::{boundedness_experiment, BoundednessMode, OperatorKind, Symbol};
use crate::report::{fmt_f64, summary_json, CsvTable};
use crate::weights::{ap_loc_constant, ap_phi_constant, check_weight_properties};

pub struct RunOutput {
    pub kind: ExperimentKind,
    pub fingerprint: String,
    pub summary: Value,
    pub csv: Vec<(String, CsvTable)>,
    /// Extra artifacts (name, contents), e.g. flag-gated atom exports.
    pub extra_files: Vec<(String, String)>,
    pub measured: BTreeMap<String, f64>,
    pub baseline_lines: Vec<String>,
}

/// Executes the configured experiment, compares against the baseline when
/// one is configured, and reports everything needed to write artifacts.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    let kind = config
        .kind
        .ok_or_else(|| Error::Config("no experiment kind selected".into()))?;
    let (measured, detail, csv, extra_files) = match kind {
        ExperimentKind::WeightsCheck => run_weights_check(config)?,
        ExperimentKind::Maximal => run_maximal(config)?,
        ExperimentKind::Czd => run_czd(config)?,
        ExperimentKind::Atomic => run_atomic(config)?,
        ExperimentKind::NormEquiv => run_norm_equiv(config)?,
        ExperimentKind::OperatorBound => run_operator(config)?,
        ExperimentKind::FiniteAtomic => run_finite(config)?,
    };
    let fingerprint = config.fingerprint();
    let summary = summary_json(kind.as_str(), &fingerprint, &measured, detail)?;

    let mut baseline_lines = Vec::new();
    if let Some(bpath) = &config.baseline {
        let path = Path::new(bpath);
        let mut baseline = Baseline::load(path)?;
        if config.update_baseline || !baseline.has(&fingerprint) {
            baseline.update(&fingerprint, &measured, DEFAULT_TOLERANCE);
            baseline.save(path)?;
            baseline_lines.push(format!("baseline frozen under {fingerprint}"));
        } else {
            baseline_lines = baseline.compare(&fingerprint, &measured)?;
        }
    }

    Ok(RunOutput { kind, fingerprint, summary, csv, extra_files, measured, baseline_lines })
}

/// Writes `summary.json` and the CSV tables under the output directory.
pub fn write_artifacts(out: &RunOutput, dir: &Path) -> Result<Vec<String>> {
    let mut written = Vec::new();
    let summary_path = dir.join("summary.json");
    crate::report::write_json(&summary_path, &out.summary)?;
    written.push(summary_path.to_string_lossy().into_owned());
    for (name, table) in &out.csv {
        let path = dir.join(name);
        table.write(&path)?;
        written.push(path.to_string_lossy().into_owned());
    }
    for (name, contents) in &out.extra_files {
        let path = dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, contents)?;
        written.push(path.to_string_lossy().into_owned());
    }
    Ok(written)
}

type ExperimentResult =
    (BTreeMap<String, f64>, Value, Vec<(String, CsvTable)>, Vec<(String, String)>);

fn run_weights_check(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let grid = config.grid.build()?;
    let weight = config.build_weight(grid)?;
    let spec = &config.weights_check;
    let fam = CubeFamily::local(spec.side_cap, &grid);

    let mut measured = BTreeMap::new();
    let mut table = CsvTable::new(&["p", "constant", "argmax_center", "argmax_side"]);
    for &p in &spec.p_list {
        let rep = ap_loc_constant(&weight, p, spec.side_cap, fam)?;
        measured.insert(format!("ap_loc_p{p}"), rep.constant);
        table.push(vec![
            fmt_f64(p),
            fmt_f64(rep.constant),
            fmt_f64(rep.argmax.center[0]),
            fmt_f64(rep.argmax.side),
        ]);
    }
    let p_dual = spec.p_list.iter().cloned().find(|&p| p > 1.0).unwrap_or(2.0);
    let props = check_weight_properties(&weight, p_dual)?;
    measured.insert("duality_rel_err".into(), props.duality_rel_err);
    measured.insert("small_doubling".into(), props.small_doubling);
    measured.insert("large_increment".into(), props.large_increment);
    let phi = ap_phi_constant(&weight, p_dual.max(1.5), spec.phi_alpha)?;
    measured.insert(format!("ap_phi_alpha{}", spec.phi_alpha), phi.constant);

    let detail = json!({
        "weight": weight.name,
        "family": fam.describe(),
        "monotone_in_p": props.monotone_in_p,
        "p_sweep": props.p_sweep,
        "sweep_constants": props.constants,
    });
    Ok((measured, detail, vec![("constants.csv".into(), table)], Vec::new()))
}

fn run_maximal(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let grid = config.grid.build()?;
    let weight = config.build_weight(grid)?;
    let params = config.params.build(grid.n)?;
    let central = config
        .dictionary
        .build(params.n_grand, grid.n, DictVariant::Central, grid.half_width)?;
    let wide = config
        .dictionary
        .build(params.n_grand, grid.n, DictVariant::Wide, grid.half_width)?;
    let corpus = corpus_generate(grid, &config.corpus)?;

    let mut table = CsvTable::new(&["input", "hardy_norm", "sup_m0", "sup_mbar", "sup_m", "sup_mloc"]);
    let mut dom_ratio = 0.0f64;
    let mut norms = Vec::new();
    for (name, f) in &corpus {
        let m0 = grand_maximal(f, &central, GrandMode::Centered);
        let mbar = grand_maximal(f, &wide, GrandMode::Centered);
        let mnt = grand_maximal(f, &wide, GrandMode::NonTangential);
        let mloc = local_hl_maximal(f);
        for i in grid.indices() {
            if mloc.values[i].re > 1e-12 {
                dom_ratio = dom_ratio.max(m0.values[i].re / mloc.values[i].re);
            }
        }
        let hn = weighted_lp_norm(&m0, &weight, params.p)?;
        norms.push(hn);
        table.push(vec![
            name.clone(),
            fmt_f64(hn),
            fmt_f64(m0.sup_norm()),
            fmt_f64(mbar.sup_norm()),
            fmt_f64(mnt.sup_norm()),
            fmt_f64(mloc.sup_norm()),
        ]);
    }
    // measured quasi-triangle constant over consecutive corpus pairs
    let mut quasi_k = 0.0f64;
    for pair in corpus.windows(2) {
        let (ref n1, ref f) = pair[0];
        let (_, ref g) = pair[1];
        let _ = n1;
        let sum = f.axpy(1.0.into(), g, 1.0.into());
        let nf = hardy_quasi_norm(f, &weight, &params, &central)?;
        let ng = hardy_quasi_norm(g, &weight, &params, &central)?;
        let nsum = hardy_quasi_norm(&sum, &weight, &params, &central)?;
        if nf + ng > 0.0 {
            quasi_k = quasi_k.max(nsum / (nf + ng));
        }
    }
    let mut measured = BTreeMap::new();
    measured.insert("grand_vs_local_sup_ratio".into(), dom_ratio);
    measured.insert("quasi_triangle_k".into(), quasi_k);
    measured.insert(
        "hardy_norm_sup".into(),
        norms.iter().cloned().fold(0.0, f64::max),
    );
    let detail = json!({
        "dictionary": {"members": central.members.len(), "scales": central.scales,
                        "wide_radius": wide.support_radius},
        "corpus_size": corpus.len(),
    });
    Ok((measured, detail, vec![("maximal.csv".into(), table)], Vec::new()))
}

fn run_czd(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let grid = config.grid.build()?;
    let weight = config.build_weight(grid)?;
    let params = config.params.build(grid.n)?;
    let dict = config
        .dictionary
        .build(params.n_grand, grid.n, DictVariant::Wide, grid.half_width)?;
    let corpus = corpus_generate(grid, &config.corpus)?;

    let mut table = CsvTable::new(&[
        "input", "lambda", "cubes", "recon_err", "c2_star", "c3_star", "c9_star", "decay_slope",
    ]);
    let mut worst_recon = 0.0f64;
    let mut c2 = 0.0f64;
    let mut c3 = 0.0f64;
    let mut c9 = 0.0f64;
    let mut bad_mass = 0.0f64;
    let mut slope_max = f64::NEG_INFINITY;
    for (name, f) in corpus.iter() {
        let mf = grand_maximal(f, &dict, GrandMode::NonTangential);
        let sup = mf.sup_norm();
        for &frac in &config.czd.height_fractions {
            let lambda = frac * sup;
            let dec = cz_decompose(f, lambda, &params, &dict, 2)?;
            let rec = dec.reconstruction_error(f) / f.sup_norm().max(1e-300);
            worst_recon = worst_recon.max(rec);
            let diag = verify_czd(&dec, f, &weight, &dict);
            c2 = c2.max(diag.c2_star);
            c3 = c3.max(diag.c3_star);
            c9 = c9.max(diag.c9_star);
            bad_mass = bad_mass.max(diag.bad_mass_ratio);
            if dec.n_cubes() > 0 && diag.decay_slope.is_finite() && diag.decay_slope != 0.0 {
                slope_max = slope_max.max(diag.decay_slope);
            }
            table.push(vec![
                name.clone(),
                fmt_f64(lambda),
                dec.n_cubes().to_string(),
                fmt_f64(rec),
                fmt_f64(diag.c2_star),
                fmt_f64(diag.c3_star),
                fmt_f64(diag.c9_star),
                fmt_f64(diag.decay_slope),
            ]);
        }
    }
    let mut measured = BTreeMap::new();
    measured.insert("recon_rel_err".into(), worst_recon);
    measured.insert("c2_star".into(), c2);
    measured.insert("c3_star".into(), c3);
    measured.insert("c9_star".into(), c9);
    measured.insert("bad_mass_ratio".into(), bad_mass);
    if slope_max.is_finite() {
        measured.insert("decay_slope_max".into(), slope_max);
    }
    let detail = json!({"heights": config.czd.height_fractions, "corpus_size": corpus.len()});
    Ok((measured, detail, vec![("czd.csv".into(), table)], Vec::new()))
}

fn run_atomic(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let grid = config.grid.build()?;
    let weight = config.build_weight(grid)?;
    let params = config.params.build(grid.n)?;
    let dict = config
        .dictionary
        .build(params.n_grand, grid.n, DictVariant::Wide, grid.half_width)?;
    let corpus = corpus_generate(grid, &config.corpus)?;

    let mut table = CsvTable::new(&[
        "input", "atoms", "single", "recon_rel_err", "norm_upper", "hardy_norm", "worst_moment",
    ]);
    let mut worst_recon = 0.0f64;
    let mut worst_moment = 0.0f64;
    let mut atoms_total = 0usize;
    let mut failures = 0usize;
    let mut extra: Vec<(String, String)> = Vec::new();
    for (name, f) in corpus.iter() {
        let dec = atomic_decompose(f, &weight, &params, &dict, None)?;
        if config.export_atoms {
            extra.push((format!("atoms/{name}.manifest.json"), crate::atoms::export_json(&dec)));
            for (i, t) in dec.terms.iter().enumerate() {
                extra.push((
                    format!("atoms/{name}.atom-{i:04}.csv"),
                    crate::grid::to_csv(&t.atom.as_dense()),
                ));
            }
        }
        let rec = reconstruct(&dec);
        let err = f
            .values
            .iter()
            .zip(rec.values.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
            / f.sup_norm().max(1e-300);
        worst_recon = worst_recon.max(err);
        let mut member_worst = 0.0f64;
        for t in dec.terms.iter().chain(dec.single.iter()) {
            let rep = validate_atom(&t.atom, &weight);
            if !rep.pass {
                failures += 1;
            }
            member_worst = member_worst.max(rep.worst_moment_residual);
        }
        worst_moment = worst_moment.max(member_worst);
        atoms_total += dec.n_atoms();
        let upper = atomic_norm_upper(&dec, params.p);
        let hardy = hardy_quasi_norm(
            f,
            &weight,
            &params,
            &config
                .dictionary
                .build(params.n_grand, grid.n, DictVariant::Central, grid.half_width)?,
        )?;
        table.push(vec![
            name.clone(),
            dec.terms.len().to_string(),
            dec.single.iter().count().to_string(),
            fmt_f64(err),
            fmt_f64(upper),
            fmt_f64(hardy),
            fmt_f64(member_worst),
        ]);
    }
    let mut measured = BTreeMap::new();
    measured.insert("recon_rel_err".into(), worst_recon);
    measured.insert("worst_moment_residual".into(), worst_moment);
    measured.insert("atoms_total".into(), atoms_total as f64);
    measured.insert("validation_failures".into(), failures as f64);
    let detail = json!({"corpus_size": corpus.len(), "p": params.p, "s": params.s});
    Ok((measured, detail, vec![("atomic.csv".into(), table)], extra))
}

fn run_norm_equiv(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let grid = config.grid.build()?;
    let weight = config.build_weight(grid)?;
    let params = config.params.build(grid.n)?;
    let wide = config
        .dictionary
        .build(params.n_grand, grid.n, DictVariant::Wide, grid.half_width)?;
    let central = config
        .dictionary
        .build(params.n_grand, grid.n, DictVariant::Central, grid.half_width)?;
    let corpus = corpus_generate(grid, &config.corpus)?;

    let mut table = CsvTable::new(&["input", "norm_upper", "hardy_norm", "ratio"]);
    let mut ratios = Vec::new();
    for (name, f) in corpus.iter() {
        let dec = atomic_decompose(f, &weight, &params, &wide, None)?;
        let upper = atomic_norm_upper(&dec, params.p);
        let hardy = hardy_quasi_norm(f, &weight, &params, &central)?;
        if hardy > 0.0 {
            let r = upper / hardy;
            ratios.push(r);
            table.push(vec![name.clone(), fmt_f64(upper), fmt_f64(hardy), fmt_f64(r)]);
        }
    }
    if ratios.is_empty() {
        return Err(Error::InvalidParam("no usable corpus member".into()));
    }
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(0.0f64, f64::max);
    let mut measured = BTreeMap::new();
    measured.insert("ratio_min".into(), lo);
    measured.insert("ratio_max".into(), hi);
    measured.insert("ratio_spread".into(), hi / lo);
    let detail = json!({"corpus_size": corpus.len(), "p": params.p});
    Ok((measured, detail, vec![("ratios.csv".into(), table)], Vec::new()))
}

fn parse_mode(s: &str) -> Result<BoundednessMode> {
    match s {
        "strong" => Ok(BoundednessMode::Strong),
        "weak" => Ok(BoundednessMode::Weak),
        "hardy-to-l1" => Ok(BoundednessMode::HardyToL1),
        "hardy-to-hardy" => Ok(BoundednessMode::HardyToHardy),
        _ => Err(Error::Config(format!("unknown boundedness mode `{s}`"))),
    }
}

fn parse_operator(spec: &crate::config::OperatorSpec) -> Result<OperatorKind> {
    let resolved = match spec.diagonal.as_str() {
        "cell" => false,
        "resolved" => true,
        other => return Err(Error::Config(format!("unknown diagonal rule `{other}`"))),
    };
    match spec.kind.as_str() {
        "identity" => Ok(OperatorKind::Identity),
        "singular-t" => Ok(OperatorKind::SingularT { theta: spec.theta, resolved }),
        "commutator" => Ok(OperatorKind::Commutator {
            theta: spec.theta,
            bmo_symbol: spec.bmo_symbol.clone(),
            resolved,
        }),
        "psdo-multiplier" => Ok(OperatorKind::Psdo {
            symbol: Symbol::OscillatingMultiplier { t: 1.0 },
        }),
        "psdo-mixed" => Ok(OperatorKind::Psdo {
            symbol: Symbol::Mixed { k: 1.5, amp: 0.5, t: 1.0 },
        }),
        other => Err(Error::Config(format!("unknown operator `{other}`"))),
    }
}

fn run_operator(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let grid = config.grid.build()?;
    let weight = config.build_weight(grid)?;
    let params = config.params.build(grid.n)?;
    let dict = config
        .dictionary
        .build(params.n_grand, grid.n, DictVariant::Central, grid.half_width)?;
    let corpus = corpus_generate(grid, &config.corpus)?;
    let op = parse_operator(&config.operator)?;
    let mode = parse_mode(&config.operator.mode)?;
    let report = boundedness_experiment(
        &op,
        &weight,
        config.operator.p,
        &corpus,
        mode,
        Some((&params, &dict)),
    )?;

    let mut table = CsvTable::new(&["input", "lambda", "input_norm", "output_norm", "ratio"]);
    for row in &report.rows {
        table.push(vec![
            row.input.clone(),
            row.lambda.map(fmt_f64).unwrap_or_default(),
            fmt_f64(row.input_norm),
            fmt_f64(row.output_norm),
            fmt_f64(row.ratio),
        ]);
    }
    let mut measured = BTreeMap::new();
    measured.insert("sup_ratio".into(), report.sup_ratio);
    let detail = json!({
        "operator": report.operator,
        "mode": report.mode,
        "p": report.p,
        "weight": report.weight,
    });
    Ok((measured, detail, vec![("probes.csv".into(), table)], Vec::new()))
}

fn run_finite(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let grid = config.grid.build()?;
    let weight = config.build_weight(grid)?;
    // finite decompositions need q < inf; nudge the default
    let mut pspec = config.params.clone();
    if pspec.q == "inf" {
        pspec.q = "2".into();
    }
    let params = pspec.build(grid.n)?;
    let dict = config
        .dictionary
        .build(params.n_grand, grid.n, DictVariant::Wide, grid.half_width)?;

    let n_atoms = config.finite.n_atoms.max(1);
    let mut input: Vec<AtomTerm> = Vec::new();
    for i in 0..n_atoms {
        let t = (i as f64 + 0.5) / n_atoms as f64;
        let center = -1.0 + 2.0 * t * 0.8;
        let side = 0.4 + 0.3 * ((i % 3) as f64);
        let atom = haar_atom(grid, &weight, center, side, params.p)?;
        input.push(AtomTerm { coeff: 1.0 / (i as f64 + 1.0), height: 0, atom });
    }
    let fin = finite_decompose(&input, &weight, &params, &dict, config.finite.truncation_k)?;

    // reassemble f for the reference quasi-norm
    let mut fv = vec![0.0f64; grid.len()];
    for t in &input {
        for (idx, v) in t.atom.field.cells(&grid) {
            fv[idx] += t.coeff * v;
        }
    }
    let f = crate::grid::SampledFunction::from_real_values(grid, fv)?;
    let central = config
        .dictionary
        .build(params.n_grand, grid.n, DictVariant::Central, grid.half_width)?;
    let hardy = hardy_quasi_norm(&f, &weight, &params, &central)?;

    let mut table = CsvTable::new(&["kind", "coeff", "height"]);
    for t in &fin.kept {
        table.push(vec!["kept".into(), fmt_f64(t.coeff), t.height.to_string()]);
    }
    for t in &fin.remainder_atoms {
        table.push(vec!["remainder".into(), fmt_f64(t.coeff), t.height.to_string()]);
    }
    let mut measured = BTreeMap::new();
    measured.insert("finite_norm".into(), fin.finite_norm);
    measured.insert("n0".into(), fin.n0 as f64);
    measured.insert("epsilon".into(), fin.epsilon);
    if hardy > 0.0 {
        measured.insert("equivalence_ratio".into(), fin.finite_norm / hardy);
    }
    let detail = json!({
        "truncation_k": fin.truncation_k,
        "kept": fin.kept.len(),
        "remainder_atoms": fin.remainder_atoms.len(),
        "input_atoms": n_atoms,
    });
    Ok((measured, detail, vec![("finite.csv".into(), table)], Vec::new()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::GridSpec;

    fn small_config(kind: ExperimentKind) -> ExperimentConfig {
        ExperimentConfig {
            kind: Some(kind),
            grid: GridSpec { n: 1, half_width: 8.0, m: 256 },
            corpus: crate::corpus::CorpusSpec {
                names: vec!["tent".into(), "bump".into()],
                random: 1,
                seed: 7,
                radius: 1.5,
            },
            ..Default::default()
        }
    }

    #[test]
    fn weights_check_constant_weight() {
        let mut cfg = small_config(ExperimentKind::WeightsCheck);
        cfg.weight = "const:1".into();
        let out = run(&cfg).unwrap();
        for &p in &cfg.weights_check.p_list {
            let c = out.measured[&format!("ap_loc_p{p}")];
            assert!((c - 1.0).abs() < 1e-12, "p = {p}: {c}");
        }
        assert!(out.measured["duality_rel_err"] < 1e-10);
    }

    #[test]
    fn deterministic_summary_bytes() {
        let cfg = small_config(ExperimentKind::WeightsCheck);
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(
            serde_json::to_string(&a.summary).unwrap(),
            serde_json::to_string(&b.summary).unwrap()
        );
        for ((n1, t1), (n2, t2)) in a.csv.iter().zip(b.csv.iter()) {
            assert_eq!(n1, n2);
            assert_eq!(t1.render(), t2.render());
        }
    }

    #[test]
    fn baseline_freezes_then_compares() {
        let dir = std::env::temp_dir().join("lh-exp-baseline");
        std::fs::create_dir_all(&dir).unwrap();
        let bpath = dir.join("b.json");
        std::fs::remove_file(&bpath).ok();
        let mut cfg = small_config(ExperimentKind::WeightsCheck);
        cfg.baseline = Some(bpath.to_string_lossy().into_owned());
        let first = run(&cfg).unwrap();
        assert!(first.baseline_lines[0].contains("frozen"));
        let second = run(&cfg).unwrap();
        assert!(second.baseline_lines.iter().all(|l| !l.contains("frozen")));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn operator_identity_experiment() {
        let mut cfg = small_config(ExperimentKind::OperatorBound);
        cfg.operator.kind = "identity".into();
        let out = run(&cfg).unwrap();
        assert!((out.measured["sup_ratio"] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn atomic_experiment_small() {
        let mut cfg = small_config(ExperimentKind::Atomic);
        cfg.corpus.names = vec!["tent".into()];
        cfg.corpus.random = 0;
        let out = run(&cfg).unwrap();
        assert_eq!(out.measured["validation_failures"], 0.0);
        assert!(out.measured["recon_rel_err"] < 1e-8);
    }
}
