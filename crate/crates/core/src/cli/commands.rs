use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use serde::Serialize;
use serde_json::json;

use super::manifest::{ArtifactWriter, RunManifest};
use super::{BasisChoice, Cli, Command, Format, Outcome};
use crate::dynamics::{
    amplitude_scan, qutrit_test_set, uniform_grid, EvolutionCache, SigmaPropagator,
};
use crate::hamiltonians::{
    chain_hamiltonian, project_to_sigma, pst_preset, sigma_block, swap_check, ChainSpec,
    InteractionKind, PresetVariant, Table1Op, TimeSign,
};
use crate::linalg::C64;
use crate::parity::{compare_row, mirroring_feasibility_report, RowComparison};
use crate::spin_ops::{ProductState, Representation, DENSE_SITE_CAP};
use crate::tomography::{
    band_frequency_bound, probability_mode_analysis, score_against, synthesize_channels,
    tomography_from_records, RecordMode, TomographyOptions,
};

/// Largest chain accepted by `pst-check`.
const PST_SITE_CAP: usize = 512;
/// Largest chain for which `validate` builds the full sparse operator.
const VALIDATE_FULL_SPACE_CAP: usize = 10;
/// Fidelity required by `pst-check`.
const FIDELITY_TOLERANCE: f64 = 1e-8;

pub(super) fn dispatch(cli: &Cli) -> anyhow::Result<Outcome> {
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Spectra { op, all: _, format } => spectra(out, *op, *format),
        Command::SwapCheck {
            interaction,
            time,
            tol,
        } => swap(out, interaction, *time, *tol),
        Command::Transfer {
            spec,
            source,
            target,
            t_start,
            t_stop,
            t_step,
            basis,
        } => transfer(
            out,
            spec,
            source,
            target,
            (*t_start, *t_stop, *t_step),
            *basis,
        ),
        Command::PstCheck { n, variant, time } => pst_check(out, *n, *variant, *time),
        Command::Tomography {
            spec,
            mode,
            t_step,
            samples,
            shots,
            seed,
            frequency_bound,
        } => tomography(
            out,
            spec,
            *mode,
            *t_step,
            *samples,
            TomographyOptions {
                shots: *shots,
                seed: *seed,
                frequency_bound: *frequency_bound,
            },
        ),
        Command::Validate { spec } => validate(spec),
    }
}

fn json_line<T: Serialize>(value: &T) -> anyhow::Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn read_spec(path: &Path) -> anyhow::Result<ChainSpec> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading spec {}", path.display()))?;
    ChainSpec::from_json(&text).with_context(|| format!("invalid spec {}", path.display()))
}

fn parse_interaction(name: &str) -> anyhow::Result<InteractionKind> {
    if name.eq_ignore_ascii_case("h12") {
        return Ok(InteractionKind::HeisenbergSquaredMix);
    }
    Ok(name.parse()?)
}

/// Compact rendering for the text table: integers without decimals.
fn short(x: f64) -> String {
    if (x - x.round()).abs() < 1e-10 {
        format!("{}", x.round() as i64)
    } else {
        format!("{x:.6}")
    }
}

fn short_list(v: &[f64]) -> String {
    format!(
        "{{{}}}",
        v.iter().map(|x| short(*x)).collect::<Vec<_>>().join(", ")
    )
}

fn row_status(row: &RowComparison) -> &'static str {
    match (row.matches, row.reference_consistent) {
        (true, _) => "match",
        (false, false) => "mismatch (reference row inconsistent with operator spectrum)",
        (false, true) => "MISMATCH",
    }
}

#[derive(Serialize)]
struct SpectraEntry<'a> {
    name: &'a str,
    form: &'a str,
    even: &'a [f64],
    odd: &'a [f64],
    reference_even: &'a [f64],
    reference_odd: &'a [f64],
    matches_reference: bool,
    reference_consistent: bool,
    max_deviation: Option<f64>,
    mirroring_feasible: bool,
    mirroring_reason: String,
}

fn spectra(out: Option<&Path>, op: Option<Table1Op>, format: Format) -> anyhow::Result<Outcome> {
    let ops: Vec<Table1Op> = op.map_or_else(|| Table1Op::ALL.to_vec(), |o| vec![o]);
    let rows: Vec<RowComparison> = ops.into_iter().map(compare_row).collect::<Result<_, _>>()?;
    let feasibility: Vec<_> = rows
        .iter()
        .map(|r| mirroring_feasibility_report(&r.computed))
        .collect();
    let entries: Vec<SpectraEntry> = rows
        .iter()
        .zip(&feasibility)
        .map(|(r, f)| SpectraEntry {
            name: r.op.name(),
            form: r.form,
            even: &r.computed.even_eigenvalues,
            odd: &r.computed.odd_eigenvalues,
            reference_even: &r.reference.even,
            reference_odd: &r.reference.odd,
            matches_reference: r.matches,
            reference_consistent: r.reference_consistent,
            max_deviation: r.max_deviation,
            mirroring_feasible: f.feasible,
            mirroring_reason: f.reason.clone(),
        })
        .collect();
    let passed = rows.iter().all(RowComparison::is_settled);

    let stdout = match format {
        Format::Json => json_line(&entries)?,
        Format::Text => {
            let mut s = String::new();
            let form_width = rows.iter().map(|r| r.form.len()).max().unwrap_or(4).max(4);
            let even_cells: Vec<String> = rows
                .iter()
                .map(|r| short_list(&r.computed.even_eigenvalues))
                .collect();
            let even_width = even_cells
                .iter()
                .map(String::len)
                .max()
                .unwrap_or(4)
                .max(14);
            let odd_cells: Vec<String> = rows
                .iter()
                .map(|r| short_list(&r.computed.odd_eigenvalues))
                .collect();
            let odd_width = odd_cells.iter().map(String::len).max().unwrap_or(4).max(13);
            writeln!(
                s,
                "{:<4}  {:<form_width$}  {:<even_width$}  {:<odd_width$}  status",
                "name", "form", "spectrum (even)", "spectrum (odd)"
            )?;
            for ((r, e), o) in rows.iter().zip(&even_cells).zip(&odd_cells) {
                writeln!(
                    s,
                    "{:<4}  {:<form_width$}  {:<even_width$}  {:<odd_width$}  {}",
                    r.op.name(),
                    r.form,
                    e,
                    o,
                    row_status(r)
                )?;
            }
            s
        }
    };

    if let Some(dir) = out {
        let mut w = ArtifactWriter::new(
            dir,
            RunManifest::new("spectra", None, json!({ "op": op.map(|o| o.name()) })),
        )?;
        w.write_json("spectra.json", &entries)?;
        w.finish()?;
    }
    Ok(Outcome { stdout, passed })
}

fn swap(out: Option<&Path>, interaction: &str, time: f64, tol: f64) -> anyhow::Result<Outcome> {
    let kind = parse_interaction(interaction)?;
    if kind == InteractionKind::Engineered {
        bail!("swap-check needs a parameter-free interaction, got `engineered`");
    }
    let h = chain_hamiltonian(&ChainSpec::uniform(kind, 2), Representation::Dense)?.to_dense()?;
    let u = EvolutionCache::new(&h, TimeSign::Positive)?.unitary(time);
    let check = swap_check(&u, tol)?;
    let report = json!({
        "interaction": kind.name(),
        "time": time,
        "time_over_pi": time / std::f64::consts::PI,
        "tolerance": tol,
        "is_swap_up_to_phase": check.is_swap_up_to_phase,
        "phase": { "re": check.phase.re, "im": check.phase.im, "arg": check.phase.arg() },
        "residual": check.residual,
    });
    if let Some(dir) = out {
        let params = json!({ "interaction": kind.name(), "time": time, "tol": tol });
        let mut w = ArtifactWriter::new(dir, RunManifest::new("swap-check", None, params))?;
        w.write_json("swap-check.json", &report)?;
        w.finish()?;
    }
    Ok(Outcome {
        stdout: json_line(&report)?,
        passed: check.is_swap_up_to_phase,
    })
}

fn transfer(
    out: Option<&Path>,
    spec_path: &Path,
    source: &str,
    target: &str,
    (t_start, t_stop, t_step): (f64, f64, f64),
    basis: BasisChoice,
) -> anyhow::Result<Outcome> {
    let spec = read_spec(spec_path)?;
    let parse_state = |label: &str| -> anyhow::Result<ProductState> {
        let s: ProductState = label
            .parse()
            .with_context(|| format!("invalid state `{label}`"))?;
        if s.n_sites() != spec.n {
            bail!(
                "state `{label}` has {} sites but the chain has {}",
                s.n_sites(),
                spec.n
            );
        }
        Ok(s)
    };
    let (src, dst) = (parse_state(source)?, parse_state(target)?);
    if t_step <= 0.0 {
        bail!("t-step must be positive");
    }
    if t_stop < t_start {
        bail!("t-stop must not precede t-start");
    }
    let (cache, i, j) = match basis {
        BasisChoice::Full => {
            if spec.n > DENSE_SITE_CAP {
                bail!("full-basis scans are limited to {DENSE_SITE_CAP} sites; use --basis sigma for engineered chains");
            }
            let h = chain_hamiltonian(&spec, Representation::Dense)?.to_dense()?;
            (
                EvolutionCache::new(&h, spec.time_sign)?,
                src.index(),
                dst.index(),
            )
        }
        BasisChoice::Sigma => {
            let block = sigma_block(&spec)?;
            let pos = |s: &ProductState| {
                block
                    .basis()
                    .position(s)
                    .with_context(|| format!("state {s} is outside the single-excitation subspace"))
            };
            let (i, j) = (pos(&src)?, pos(&dst)?);
            (EvolutionCache::for_block(&block, spec.time_sign)?, i, j)
        }
    };
    let grid = uniform_grid(t_start, t_stop, t_step);
    let scan = amplitude_scan(&cache, i, j, &grid)?;
    let summary = json!({
        "n": spec.n,
        "kind": spec.kind.name(),
        "basis": match basis { BasisChoice::Full => "full", BasisChoice::Sigma => "sigma" },
        "source": src.to_string(),
        "target": dst.to_string(),
        "t_start": t_start,
        "t_stop": t_stop,
        "t_step": t_step,
        "points": scan.points.len(),
        "max_abs": scan.max_abs,
        "argmax_time": scan.argmax_time,
        "argmax_time_over_pi": scan.argmax_time / std::f64::consts::PI,
    });
    if let Some(dir) = out {
        let params = json!({
            "source": src.to_string(), "target": dst.to_string(),
            "t_start": t_start, "t_stop": t_stop, "t_step": t_step,
            "basis": summary["basis"],
        });
        let mut w =
            ArtifactWriter::new(dir, RunManifest::new("transfer", Some(spec_path), params))?;
        let mut csv = Vec::new();
        scan.write_csv(&mut csv)?;
        w.write("transfer.csv", &csv)?;
        w.write_json("transfer.summary.json", &summary)?;
        w.finish()?;
    }
    Ok(Outcome {
        stdout: json_line(&summary)?,
        passed: true,
    })
}

fn pst_check(
    out: Option<&Path>,
    n: usize,
    variant: PresetVariant,
    time: f64,
) -> anyhow::Result<Outcome> {
    if !(2..=PST_SITE_CAP).contains(&n) {
        bail!("n must lie in 2..={PST_SITE_CAP}, got {n}");
    }
    let spec = pst_preset(n, variant)?;
    let prop = SigmaPropagator::new(&spec)?;
    let coefficients = prop.coefficients(time)?;
    let mut states = Vec::new();
    let (mut min_raw, mut min_corrected) = (f64::INFINITY, f64::INFINITY);
    for q in qutrit_test_set() {
        let raw = prop.fidelity(&q, time, false)?;
        let corrected = prop.fidelity(&q, time, true)?;
        min_raw = min_raw.min(raw);
        min_corrected = min_corrected.min(corrected);
        states.push(json!({
            "vacuum": [q.vacuum.re, q.vacuum.im],
            "up": [q.up.re, q.up.im],
            "down": [q.down.re, q.down.im],
            "raw_fidelity": raw,
            "corrected_fidelity": corrected,
        }));
    }
    let passed = match variant {
        PresetVariant::HalfLength => min_corrected >= 1.0 - FIDELITY_TOLERANCE,
        PresetVariant::PhaseExact => min_raw >= 1.0 - FIDELITY_TOLERANCE,
    };
    let c = |z: C64| json!({ "re": z.re, "im": z.im });
    let report = json!({
        "n": n,
        "variant": variant.name(),
        "time": time,
        "C": spec.field_quadratic[0],
        "couplings": spec.a,
        "coefficients": { "vacuum": c(coefficients.vacuum), "up": c(coefficients.up), "down": c(coefficients.down) },
        "min_raw_fidelity": min_raw,
        "min_corrected_fidelity": min_corrected,
        "criterion": match variant {
            PresetVariant::HalfLength => "corrected fidelity >= 1 - 1e-8",
            PresetVariant::PhaseExact => "raw fidelity >= 1 - 1e-8",
        },
        "passed": passed,
        "states": states,
    });
    if let Some(dir) = out {
        let params = json!({ "n": n, "variant": variant.name(), "time": time });
        let mut w = ArtifactWriter::new(dir, RunManifest::new("pst-check", None, params))?;
        w.write_json("pst-check.json", &report)?;
        w.finish()?;
    }
    Ok(Outcome {
        stdout: json_line(&report)?,
        passed,
    })
}

fn tomography(
    out: Option<&Path>,
    spec_path: &Path,
    mode: RecordMode,
    t_step: f64,
    samples: usize,
    options: TomographyOptions,
) -> anyhow::Result<Outcome> {
    let hidden = read_spec(spec_path)?;
    if t_step <= 0.0 {
        bail!("t-step must be positive");
    }
    let times: Vec<f64> = (0..samples).map(|k| k as f64 * t_step).collect();
    let (up, down) =
        synthesize_channels(&hidden, &times, mode, options).context("tomography pipeline")?;
    let report = match mode {
        RecordMode::Amplitude => {
            let bound = match options.frequency_bound {
                Some(b) => b,
                None => band_frequency_bound(&hidden)?,
            };
            let mut result = tomography_from_records(&up, &down, hidden.n, Some(bound))
                .context("tomography pipeline")?;
            result.shots = options.shots;
            result.seed = options.shots.map(|_| options.seed);
            score_against(&mut result, &hidden)?;
            serde_json::to_value(&result)?
        }
        RecordMode::Probability => {
            let up_gaps = probability_mode_analysis(&up, hidden.n, None)
                .context("probability analysis (up)")?;
            let down_gaps = probability_mode_analysis(&down, hidden.n, None)
                .context("probability analysis (down)")?;
            json!({
                "n": hidden.n,
                "mode": "probability",
                "note": "probability records determine eigenvalue gaps and weight products only",
                "up": up_gaps,
                "down": down_gaps,
                "shots": options.shots,
                "seed": options.shots.map(|_| options.seed),
            })
        }
    };
    if let Some(dir) = out {
        let params = json!({
            "mode": mode.name(), "t_step": t_step, "samples": samples,
            "shots": options.shots, "frequency_bound": options.frequency_bound,
        });
        let mut w =
            ArtifactWriter::new(dir, RunManifest::new("tomography", Some(spec_path), params))?;
        w.set_seed(options.shots.map(|_| options.seed));
        for (name, record) in [("records_up.csv", &up), ("records_down.csv", &down)] {
            let mut buf = Vec::new();
            record.write_csv(&mut buf)?;
            w.write(name, &buf)?;
        }
        w.write_json("tomography.json", &report)?;
        w.finish()?;
    }
    Ok(Outcome {
        stdout: json_line(&report)?,
        passed: true,
    })
}

fn validate(spec_path: &Path) -> anyhow::Result<Outcome> {
    let spec = read_spec(spec_path)?;
    let mut report = json!({
        "valid": true,
        "n": spec.n,
        "kind": spec.kind.name(),
        "time_sign": i64::from(spec.time_sign),
        "hilbert_dim": crate::spin_ops::power_of_three(spec.n),
    });
    if spec.n <= VALIDATE_FULL_SPACE_CAP {
        let h = chain_hamiltonian(&spec, Representation::for_sites(spec.n))?;
        report["hermiticity_defect"] = json!(h.hermiticity_defect());
        if spec.kind == InteractionKind::Engineered {
            report["sigma_leakage"] = json!(project_to_sigma(&h)?.leakage);
        }
    }
    if spec.kind == InteractionKind::Engineered {
        report["sigma_mirror_commutator"] = json!(sigma_block(&spec)?.mirror_commutator());
    }
    Ok(Outcome {
        stdout: json_line(&report)?,
        passed: true,
    })
}
