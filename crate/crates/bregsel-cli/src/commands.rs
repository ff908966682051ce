//! The five subcommand implementations.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use bregsel::divergence::{BregmanGenerator, TruncationPolicy};
use bregsel::montecarlo::{table_preset, ExperimentConfig, TableRow};
use bregsel::parametric::{
    gamma_one_step_mle, lognormal_mle, GammaParams, LogNormalParams, MixtureDgp, OneStepConfig,
};
use bregsel::quad::QuadratureSpec;
use bregsel::selection::{
    fit_pair, gof_statistic, u_statistic, Decision, FitMethod, FittedModel, GofConfig,
    ModelFamily, PairSettings, SelectionResult,
};

use crate::args::{CommonOpts, FamilyChoice, Format, Resolved, SimulatePlan};
use crate::dataset::load_sample;
use crate::report::{color_enabled, csv_num, heading, write_output};
use crate::{module_error, CliError};

pub fn dispatch(cli: Resolved) -> Result<u8, CliError> {
    match cli {
        Resolved::Fit(common) => cmd_fit(&common),
        Resolved::Select(common) => cmd_select(&common),
        Resolved::Gof {
            common,
            family,
            replications,
        } => cmd_gof(&common, family, replications),
        Resolved::Simulate { common, plan } => cmd_simulate(&common, &plan),
        Resolved::Plotdata { common, bins } => cmd_plotdata(&common, bins),
    }
}

fn generator_from(common: &CommonOpts) -> Result<BregmanGenerator, CliError> {
    BregmanGenerator::new(common.beta, common.c1, 0.0, 0.0).map_err(module_error)
}

fn truncation_from(common: &CommonOpts) -> Result<TruncationPolicy, CliError> {
    TruncationPolicy::new(common.gamma_n).map_err(module_error)
}

fn pair_settings_from(common: &CommonOpts) -> Result<PairSettings, CliError> {
    Ok(PairSettings {
        generator: generator_from(common)?,
        trunc: truncation_from(common)?,
        ..PairSettings::default()
    })
}

fn family_name(model: &FittedModel) -> &'static str {
    match model.family() {
        ModelFamily::Gamma => "gamma",
        ModelFamily::LogNormal => "lognormal",
    }
}

/// Parameter names and values of a fitted model, for uniform rendering.
fn model_params(model: &FittedModel) -> [(&'static str, f64); 2] {
    match model {
        FittedModel::Gamma(p) => [("alpha", p.alpha), ("eta", p.eta)],
        FittedModel::LogNormal(p) => [("mu", p.mu), ("sigma", p.sigma)],
    }
}

fn model_json(model: &FittedModel) -> serde_json::Value {
    let [(n1, v1), (n2, v2)] = model_params(model);
    json!({ "family": family_name(model), n1: v1, n2: v2 })
}

fn decision_name(decision: Decision) -> &'static str {
    match decision {
        Decision::PreferA => "prefer_a",
        Decision::Indecisive => "indecisive",
        Decision::PreferB => "prefer_b",
    }
}

fn decision_exit(decision: Decision) -> u8 {
    match decision {
        Decision::PreferA => 0,
        Decision::PreferB => 1,
        Decision::Indecisive => 2,
    }
}

fn cmd_fit(common: &CommonOpts) -> Result<u8, CliError> {
    let sample = load_sample(common.input.as_deref())?;
    let gamma = gamma_one_step_mle(&sample, &OneStepConfig::default()).map_err(module_error)?;
    let lognormal = lognormal_mle(&sample).map_err(module_error)?;

    let content = match common.format {
        Format::Text => {
            let color = color_enabled(common.out.as_deref());
            let mut s = String::new();
            s.push_str(&heading(
                &format!("fitted candidates (n = {})", sample.len()),
                color,
            ));
            s.push('\n');
            s.push_str(&format!(
                "  gamma      alpha = {}  eta = {}\n",
                gamma.alpha, gamma.eta
            ));
            s.push_str(&format!(
                "  lognormal  mu = {}  sigma = {}\n",
                lognormal.mu, lognormal.sigma
            ));
            s
        }
        Format::Json => {
            let doc = json!({
                "n": sample.len(),
                "gamma": { "alpha": gamma.alpha, "eta": gamma.eta },
                "lognormal": { "mu": lognormal.mu, "sigma": lognormal.sigma },
            });
            format!("{doc:#}\n")
        }
        Format::Csv => {
            let mut s = String::from("family,parameter,estimate\n");
            for (family, name, value) in [
                ("gamma", "alpha", gamma.alpha),
                ("gamma", "eta", gamma.eta),
                ("lognormal", "mu", lognormal.mu),
                ("lognormal", "sigma", lognormal.sigma),
            ] {
                s.push_str(&format!("{family},{name},{}\n", csv_num(value)));
            }
            s
        }
    };
    write_output(common.out.as_deref(), &content)?;
    Ok(0)
}

fn cmd_select(common: &CommonOpts) -> Result<u8, CliError> {
    let sample = load_sample(common.input.as_deref())?;
    let settings = pair_settings_from(common)?;
    let pair = fit_pair(&sample, &settings).map_err(module_error)?;
    let mut rng = ChaCha8Rng::seed_from_u64(common.seed);
    let result = u_statistic(&sample, &pair, common.bootstrap, common.level, &mut rng)
        .map_err(module_error)?;

    let content = render_selection(common, &pair.model_a, &pair.model_b, pair.bandwidth, &result);
    write_output(common.out.as_deref(), &content)?;
    if result.kappa_degenerate {
        eprintln!("bregsel: warning: bootstrap spread degenerated; reporting indecisive");
    }
    Ok(decision_exit(result.decision))
}

fn render_selection(
    common: &CommonOpts,
    model_a: &FittedModel,
    model_b: &FittedModel,
    bandwidth: f64,
    result: &SelectionResult,
) -> String {
    match common.format {
        Format::Text => {
            let color = color_enabled(common.out.as_deref());
            let mut s = String::new();
            s.push_str(&heading(
                &format!(
                    "selection report (n = {}, level = {})",
                    result.n, result.level
                ),
                color,
            ));
            s.push('\n');
            let [(an1, av1), (an2, av2)] = model_params(model_a);
            let [(bn1, bv1), (bn2, bv2)] = model_params(model_b);
            s.push_str(&format!(
                "  model A: {}  {an1} = {av1}  {an2} = {av2}\n",
                family_name(model_a)
            ));
            s.push_str(&format!(
                "  model B: {}  {bn1} = {bv1}  {bn2} = {bv2}\n",
                family_name(model_b)
            ));
            s.push_str(&format!("  cross-validated bandwidth = {bandwidth}\n"));
            s.push_str(&format!("  divergence to model A = {}\n", result.d_a));
            s.push_str(&format!("  divergence to model B = {}\n", result.d_b));
            s.push_str(&format!(
                "  kappa_hat = {}  u = {}\n",
                result.kappa_hat, result.u
            ));
            if result.kappa_degenerate {
                s.push_str("  note: bootstrap spread degenerated; u forced to 0\n");
            }
            s.push_str(&format!("  decision: {}\n", decision_name(result.decision)));
            s
        }
        Format::Json => {
            let doc = json!({
                "n": result.n,
                "level": result.level,
                "model_a": model_json(model_a),
                "model_b": model_json(model_b),
                "bandwidth": bandwidth,
                "d_a": result.d_a,
                "d_b": result.d_b,
                "kappa_hat": result.kappa_hat,
                "u": result.u,
                "kappa_degenerate": result.kappa_degenerate,
                "decision": decision_name(result.decision),
            });
            format!("{doc:#}\n")
        }
        Format::Csv => {
            let [(_, av1), (_, av2)] = model_params(model_a);
            let [(_, bv1), (_, bv2)] = model_params(model_b);
            let mut s = String::from(
                "n,level,model_a,param_a1,param_a2,model_b,param_b1,param_b2,\
                 bandwidth,d_a,d_b,kappa_hat,u,kappa_degenerate,decision\n",
            );
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                result.n,
                csv_num(result.level),
                family_name(model_a),
                csv_num(av1),
                csv_num(av2),
                family_name(model_b),
                csv_num(bv1),
                csv_num(bv2),
                csv_num(bandwidth),
                csv_num(result.d_a),
                csv_num(result.d_b),
                csv_num(result.kappa_hat),
                csv_num(result.u),
                result.kappa_degenerate,
                decision_name(result.decision),
            ));
            s
        }
    }
}

fn cmd_gof(common: &CommonOpts, family: FamilyChoice, replications: usize) -> Result<u8, CliError> {
    let sample = load_sample(common.input.as_deref())?;
    let (family, method) = match family {
        FamilyChoice::Gamma => (ModelFamily::Gamma, FitMethod::OneStepMle),
        FamilyChoice::LogNormal => (ModelFamily::LogNormal, FitMethod::ClosedFormMle),
    };
    let cfg = GofConfig {
        family,
        method,
        generator: generator_from(common)?,
        trunc: truncation_from(common)?,
        quad: QuadratureSpec::default(),
        one_step: OneStepConfig::default(),
        replications,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(common.seed);
    let report = gof_statistic(&sample, &cfg, &mut rng).map_err(module_error)?;
    let rejected = report.p_value < common.level;

    let fam = family_name(&report.fitted);
    let [(n1, v1), (n2, v2)] = model_params(&report.fitted);
    let content = match common.format {
        Format::Text => {
            let color = color_enabled(common.out.as_deref());
            let mut s = String::new();
            s.push_str(&heading(
                &format!("goodness-of-fit: {fam} (n = {})", sample.len()),
                color,
            ));
            s.push('\n');
            s.push_str(&format!("  fitted: {n1} = {v1}  {n2} = {v2}\n"));
            s.push_str(&format!("  t_obs = {}\n", report.t_obs));
            s.push_str(&format!(
                "  p_value = {} ({} of {} null replicates used)\n",
                report.p_value, report.used, replications
            ));
            s.push_str(&format!(
                "  verdict at level {}: {}\n",
                common.level,
                if rejected { "rejected" } else { "not rejected" }
            ));
            s
        }
        Format::Json => {
            let doc = json!({
                "n": sample.len(),
                "family": fam,
                "fitted": model_json(&report.fitted),
                "t_obs": report.t_obs,
                "p_value": report.p_value,
                "replicates_used": report.used,
                "replications": replications,
                "level": common.level,
                "rejected": rejected,
            });
            format!("{doc:#}\n")
        }
        Format::Csv => {
            let mut s = String::from(
                "n,family,param1,param2,t_obs,p_value,replicates_used,level,rejected\n",
            );
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                sample.len(),
                fam,
                csv_num(v1),
                csv_num(v2),
                csv_num(report.t_obs),
                csv_num(report.p_value),
                report.used,
                csv_num(common.level),
                rejected,
            ));
            s
        }
    };
    write_output(common.out.as_deref(), &content)?;
    Ok(if rejected { 1 } else { 0 })
}

fn cmd_simulate(common: &CommonOpts, plan: &SimulatePlan) -> Result<u8, CliError> {
    let pair = pair_settings_from(common)?;
    let cfg = match plan.table {
        Some(table) => {
            let mut cfg = table_preset(table, common.seed).map_err(module_error)?;
            if let Some(sizes) = &plan.sizes {
                cfg.sample_sizes = sizes.clone();
            }
            cfg.replications = plan.reps;
            cfg.level = common.level;
            cfg.bootstrap_b = common.bootstrap;
            cfg.pair = pair;
            cfg
        }
        None => {
            let pi = plan.pi.expect("argument resolution enforces table xor pi");
            ExperimentConfig {
                dgp: MixtureDgp::new(
                    pi,
                    GammaParams::new(4.02804, 0.055767).map_err(module_error)?,
                    LogNormalParams::new(4.150614, 0.521485).map_err(module_error)?,
                )
                .map_err(module_error)?,
                sample_sizes: plan
                    .sizes
                    .clone()
                    .unwrap_or_else(|| vec![20, 40, 60, 80, 90]),
                replications: plan.reps,
                master_seed: common.seed,
                level: common.level,
                bootstrap_b: common.bootstrap,
                pair,
            }
        }
    };
    let rows = bregsel::montecarlo::run_experiment(&cfg).map_err(module_error)?;
    for row in &rows {
        if row.high_skip_warning {
            eprintln!(
                "bregsel: warning: n = {}: {} of {} replications skipped",
                row.n,
                row.skipped,
                row.completed + row.skipped
            );
        }
    }

    let content = match common.format {
        Format::Text => render_rows_text(common, &cfg, &rows),
        Format::Json => render_rows_json(&cfg, &rows),
        Format::Csv => render_rows_csv(&rows),
    };
    write_output(common.out.as_deref(), &content)?;
    Ok(0)
}

const SIM_CSV_HEADER: &str = "n,alpha_mean,alpha_sd,eta_mean,eta_sd,mu_mean,mu_sd,\
     sigma_mean,sigma_sd,d1_mean,d1_sd,d2_mean,d2_sd,u_mean,u_sd,pcs_a,pcs_ind,pcs_b,skipped";

fn render_rows_csv(rows: &[TableRow]) -> String {
    let mut s = String::from(SIM_CSV_HEADER);
    s.push('\n');
    for row in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            row.n,
            csv_num(row.alpha.mean),
            csv_num(row.alpha.sd),
            csv_num(row.eta.mean),
            csv_num(row.eta.sd),
            csv_num(row.mu.mean),
            csv_num(row.mu.sd),
            csv_num(row.sigma.mean),
            csv_num(row.sigma.sd),
            csv_num(row.d_a.mean),
            csv_num(row.d_a.sd),
            csv_num(row.d_b.mean),
            csv_num(row.d_b.sd),
            csv_num(row.u.mean),
            csv_num(row.u.sd),
            csv_num(row.pcs[0]),
            csv_num(row.pcs[1]),
            csv_num(row.pcs[2]),
            row.skipped,
        ));
    }
    s
}

fn render_rows_json(cfg: &ExperimentConfig, rows: &[TableRow]) -> String {
    let rows: Vec<_> = rows
        .iter()
        .map(|row| {
            json!({
                "n": row.n,
                "alpha": { "mean": row.alpha.mean, "sd": row.alpha.sd },
                "eta": { "mean": row.eta.mean, "sd": row.eta.sd },
                "mu": { "mean": row.mu.mean, "sd": row.mu.sd },
                "sigma": { "mean": row.sigma.mean, "sd": row.sigma.sd },
                "d_a": { "mean": row.d_a.mean, "sd": row.d_a.sd },
                "d_b": { "mean": row.d_b.mean, "sd": row.d_b.sd },
                "u": { "mean": row.u.mean, "sd": row.u.sd },
                "pcs": { "prefer_a": row.pcs[0], "indecisive": row.pcs[1], "prefer_b": row.pcs[2] },
                "completed": row.completed,
                "skipped": row.skipped,
            })
        })
        .collect();
    let doc = json!({
        "pi": cfg.dgp.pi,
        "replications": cfg.replications,
        "master_seed": cfg.master_seed,
        "level": cfg.level,
        "bootstrap": cfg.bootstrap_b,
        "rows": rows,
    });
    format!("{doc:#}\n")
}

fn render_rows_text(common: &CommonOpts, cfg: &ExperimentConfig, rows: &[TableRow]) -> String {
    let color = color_enabled(common.out.as_deref());
    let mut s = String::new();
    s.push_str(&heading(
        &format!(
            "campaign: pi = {}, {} replications per size, level = {}, bootstrap = {}",
            cfg.dgp.pi, cfg.replications, cfg.level, cfg.bootstrap_b
        ),
        color,
    ));
    s.push('\n');
    s.push_str(&format!(
        "{:>6} {:>10} {:>10} {:>10} {:>10} {:>12} {:>12} {:>9} {:>7} {:>7} {:>7} {:>7}\n",
        "n", "alpha", "eta", "mu", "sigma", "d_a", "d_b", "u", "pcs_a", "ind", "pcs_b", "skip"
    ));
    for row in rows {
        s.push_str(&format!(
            "{:>6} {:>10.4} {:>10.5} {:>10.4} {:>10.4} {:>12.4e} {:>12.4e} {:>9.3} {:>7.1} {:>7.1} {:>7.1} {:>7}\n",
            row.n,
            row.alpha.mean,
            row.eta.mean,
            row.mu.mean,
            row.sigma.mean,
            row.d_a.mean,
            row.d_b.mean,
            row.u.mean,
            row.pcs[0],
            row.pcs[1],
            row.pcs[2],
            row.skipped,
        ));
    }
    s.push_str("pcs columns are percentages of completed replications\n");
    s
}

fn cmd_plotdata(common: &CommonOpts, bins: usize) -> Result<u8, CliError> {
    let sample = load_sample(common.input.as_deref())?;
    let gamma = gamma_one_step_mle(&sample, &OneStepConfig::default()).map_err(module_error)?;
    let lognormal = lognormal_mle(&sample).map_err(module_error)?;

    let min = sample.min();
    let max = sample.max();
    if !(max > min) {
        return Err(CliError::Data(
            "histogram needs a positive data range; all observations are equal".into(),
        ));
    }
    let n = sample.len();
    let width = (max - min) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in sample.values() {
        let idx = (((v - min) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }

    let mut s = String::from("# histogram\nbin_left,bin_right,height\n");
    for (k, &count) in counts.iter().enumerate() {
        let left = min + k as f64 * width;
        let right = if k + 1 == bins {
            max
        } else {
            min + (k + 1) as f64 * width
        };
        let height = count as f64 / (n as f64 * width);
        s.push_str(&format!(
            "{},{},{}\n",
            csv_num(left),
            csv_num(right),
            csv_num(height)
        ));
    }

    const CURVE_POINTS: usize = 512;
    let grid: Vec<f64> = (0..CURVE_POINTS)
        .map(|i| min + (max - min) * i as f64 / (CURVE_POINTS - 1) as f64)
        .collect();

    s.push_str("\n# gamma_curve\nx,pdf\n");
    for &x in &grid {
        s.push_str(&format!(
            "{},{}\n",
            csv_num(x),
            csv_num(bregsel::parametric::gamma_pdf(&gamma, x))
        ));
    }
    s.push_str("\n# lognormal_curve\nx,pdf\n");
    for &x in &grid {
        s.push_str(&format!(
            "{},{}\n",
            csv_num(x),
            csv_num(bregsel::parametric::lognormal_pdf(&lognormal, x))
        ));
    }

    write_output(common.out.as_deref(), &s)?;
    Ok(0)
}
