//! The named experiments. Each returns its output files in memory; writing
//! them is left to the caller.

use clap::ValueEnum;
use serde_json::json;
use vibfilter::lattice::{
    build_thermal_lattice, entropy_peak_radius, infidelity_curve, local_stage, monte_carlo_run, plateau_radius,
    radial_profile, required_grid_radius, site_radii, site_stages, LatticeField, MergeAxis, ProfileQuantity,
    Schedule, ScheduleErrors, Step,
};
use vibfilter::num::log_space;
use vibfilter::oscillator::{InteractionMatrix, DEFAULT_NU_MAX};
use vibfilter::protocol::{
    filter_spectator_shifts, merge_protocol, merge_spectator_shifts, occupancies_of, vacancy_recursion,
    OutcomeTable,
};
use vibfilter::pulse::{fit_loss_weight, optimize_pulse, LossModel, PulseCandidate};
use vibfilter::thermo::{
    defect_probability, occupation_distribution, site_entropy, EntropyMode, OccupationDistribution, ThermalParams,
    TrapParams,
};
use vibfilter::IterationMode;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::table::{provenance, Cell, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum)]
pub enum Experiment {
    #[value(name = "fig4")]
    Fig4,
    #[value(name = "fig5")]
    Fig5,
    #[value(name = "fig6")]
    Fig6,
    #[value(name = "fig7")]
    Fig7,
    #[value(name = "table1")]
    Table1,
    #[value(name = "mc_validate")]
    McValidate,
    #[value(name = "pulse_opt")]
    PulseOpt,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Fig4,
        Experiment::Fig5,
        Experiment::Fig6,
        Experiment::Fig7,
        Experiment::Table1,
        Experiment::McValidate,
        Experiment::PulseOpt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Fig4 => "fig4",
            Experiment::Fig5 => "fig5",
            Experiment::Fig6 => "fig6",
            Experiment::Fig7 => "fig7",
            Experiment::Table1 => "table1",
            Experiment::McValidate => "mc_validate",
            Experiment::PulseOpt => "pulse_opt",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Artifact {
    Csv(Table),
    /// Non-tabular output; the provenance block is added when written.
    Text { file_name: String, contents: String },
}

impl Artifact {
    pub fn file_name(&self) -> String {
        match self {
            Artifact::Csv(t) => format!("{}.csv", t.name),
            Artifact::Text { file_name, .. } => file_name.clone(),
        }
    }

    pub fn table(&self) -> Option<&Table> {
        match self {
            Artifact::Csv(t) => Some(t),
            Artifact::Text { .. } => None,
        }
    }

    pub fn render(&self, experiment: Experiment, config: &RunConfig) -> String {
        match self {
            Artifact::Csv(t) => t.render(experiment.name(), config),
            Artifact::Text { file_name, contents } if file_name.ends_with(".json") => contents.clone(),
            Artifact::Text { file_name, contents } => {
                provenance(experiment.name(), file_name, config) + contents
            }
        }
    }
}

pub fn run_experiment(experiment: Experiment, cfg: &RunConfig) -> Result<Vec<Artifact>, CliError> {
    match experiment {
        Experiment::Fig4 => fig4(cfg),
        Experiment::Fig5 => fig5(cfg),
        Experiment::Fig6 => fig6(cfg),
        Experiment::Fig7 => fig7(cfg),
        Experiment::Table1 => table1(cfg),
        Experiment::McValidate => mc_validate(cfg),
        Experiment::PulseOpt => pulse_opt(cfg),
    }
}

const STAGES: [&str; 4] = ["initial", "filtered", "merge1", "merge2"];

fn outcome_table() -> Result<OutcomeTable, CliError> {
    let matrix = InteractionMatrix::<f64>::compute(DEFAULT_NU_MAX, 1.0)?;
    Ok(OutcomeTable::compute(&matrix)?)
}

fn two_iteration_schedule(cfg: &RunConfig, axis: MergeAxis, errors: ScheduleErrors<f64>) -> Result<Schedule<f64>, CliError> {
    Ok(Schedule::filter_and_merge(cfg.schedule.n_max, 2, axis, cfg.schedule.mode, errors)?)
}

fn fig4(cfg: &RunConfig) -> Result<Vec<Artifact>, CliError> {
    // ideal reading: no floor on the homogeneous curves
    let errors = ScheduleErrors { eps_floor: 0.0, ..cfg.schedule_errors()? };
    let schedule = two_iteration_schedule(cfg, MergeAxis::Auxiliary, errors)?;
    let table = outcome_table()?;
    let mut out = Table::with_columns(
        "fig4",
        &["T_U", "defect_initial", "defect_filtered", "defect_iter1", "defect_iter2"],
    )
    .unit("T_U", "k_B T / U_int")
    .unit("defect_*", "probability");
    let f = &cfg.fig4;
    for t_u in log_space(f.t_min_u, f.t_max_u, f.points) {
        let th = ThermalParams::new(cfg.thermal.mu_u, t_u, cfg.thermal.n_cap)?;
        let d = occupation_distribution(&th);
        let stages = site_stages(&d, &schedule, &table)?;
        let mut row: Vec<Cell> = vec![t_u.into(), defect_probability(&d).into()];
        row.extend(stages.iter().map(|s| Cell::from(defect_probability(s))));
        out.push(row);
    }
    Ok(vec![Artifact::Csv(out)])
}

struct ProfileRun {
    thermal: ThermalParams<f64>,
    trap: TrapParams<f64>,
    schedule: Schedule<f64>,
    table: OutcomeTable,
    /// Thermal field followed by the field after each step.
    stages: Vec<LatticeField<f64>>,
}

fn grid_radius(cfg: &RunConfig, thermal: &ThermalParams<f64>, trap: &TrapParams<f64>, r_max_um: f64) -> usize {
    let cover = (r_max_um / trap.spacing_um).ceil() as usize;
    required_grid_radius(thermal, trap).max(cover).max(cfg.schedule.grid_radius_sites)
}

fn profile_run(cfg: &RunConfig) -> Result<ProfileRun, CliError> {
    let thermal = cfg.thermal_params()?;
    let trap = cfg.trap_params()?;
    let schedule = two_iteration_schedule(cfg, cfg.schedule.axis, cfg.schedule_errors()?)?;
    let table = outcome_table()?;
    let field = build_thermal_lattice(&thermal, &trap, grid_radius(cfg, &thermal, &trap, cfg.profile.r_max_um))?;
    let mut stages = vec![field.clone()];
    stages.extend(field.run_with(&schedule, &table)?);
    Ok(ProfileRun { thermal, trap, schedule, table, stages })
}

fn profile_table(cfg: &RunConfig, run: &ProfileRun, name: &str, prefix: &str, q: ProfileQuantity) -> Result<Table, CliError> {
    let bin = if cfg.profile.bin_width_um > 0.0 { cfg.profile.bin_width_um } else { run.trap.spacing_um };
    let mut columns = vec!["r_um".to_string()];
    columns.extend(STAGES.iter().map(|s| format!("{prefix}_{s}")));
    let unit = match q {
        ProfileQuantity::Entropy => "nats per site",
        _ => "probability",
    };
    let mut out = Table::new(name, columns).unit("r_um", "um").unit(&format!("{prefix}_*"), unit);
    let profiles = run
        .stages
        .iter()
        .map(|f| radial_profile(f, q, bin))
        .collect::<Result<Vec<_>, _>>()?;
    for (k, point) in profiles[0].iter().enumerate() {
        if point.r_um > cfg.profile.r_max_um {
            break;
        }
        let mut row: Vec<Cell> = vec![point.r_um.into()];
        row.extend(profiles.iter().map(|p| Cell::from(p[k].value)));
        out.push(row);
    }
    Ok(out)
}

fn fig5(cfg: &RunConfig) -> Result<Vec<Artifact>, CliError> {
    let run = profile_run(cfg)?;
    let main = profile_table(cfg, &run, "fig5", "P1", ProfileQuantity::P1)?;
    let mut plateau = Table::with_columns("fig5_plateau", &["stage", "min_P1", "has_plateau", "plateau_radius_um"])
        .unit("plateau_radius_um", "um");
    for (name, field) in STAGES.iter().zip(&run.stages) {
        let r = plateau_radius(field, cfg.profile.plateau_min_p1);
        plateau.push(vec![
            (*name).into(),
            cfg.profile.plateau_min_p1.into(),
            r.is_some().into(),
            r.unwrap_or(0.0).into(),
        ]);
    }
    let snapshot = run.stages.last().expect("stages").snapshot();
    Ok(vec![
        Artifact::Csv(main),
        Artifact::Csv(plateau),
        Artifact::Text { file_name: "fig5_snapshot.txt".into(), contents: snapshot },
    ])
}

fn fig6(cfg: &RunConfig) -> Result<Vec<Artifact>, CliError> {
    let run = profile_run(cfg)?;
    let main = profile_table(cfg, &run, "fig6", "entropy", ProfileQuantity::Entropy)?;
    let mut peaks = Table::with_columns("fig6_peaks", &["stage", "has_peak", "r_peak_um", "entropy_peak"])
        .unit("r_peak_um", "um")
        .unit("entropy_peak", "nats per site");
    for (k, name) in STAGES.iter().enumerate() {
        let r = entropy_peak_radius(&run.thermal, &run.trap, &run.schedule, k, cfg.profile.r_max_um, &run.table)?;
        let s = match r {
            Some(r) => {
                let d = local_stage(r, &run.thermal, &run.trap, &run.schedule, k, &run.table)?;
                site_entropy(&d, EntropyMode::Binary)
            }
            None => 0.0,
        };
        peaks.push(vec![(*name).into(), r.is_some().into(), r.unwrap_or(0.0).into(), s.into()]);
    }
    Ok(vec![Artifact::Csv(main), Artifact::Csv(peaks)])
}

fn fig7(cfg: &RunConfig) -> Result<Vec<Artifact>, CliError> {
    let f = &cfg.fig7;
    let trap = cfg.trap_params()?;
    let table = outcome_table()?;
    let errors = ScheduleErrors { eps_floor: f.eps_floor, ..cfg.schedule_errors()? };
    let thermals = f
        .mu_values
        .iter()
        .map(|&mu| ThermalParams::new(mu, cfg.thermal.t_u, cfg.thermal.n_cap))
        .collect::<Result<Vec<_>, _>>()?;
    let radius = thermals.iter().map(|th| grid_radius(cfg, th, &trap, f.r_max_um)).max().expect("validated");

    let mut columns = vec!["r_cut_um".to_string(), "N_sites".to_string()];
    let mut curves = Vec::new();
    let mut summary = Table::with_columns("fig7_summary", &["mu_U", "iterations", "N_max", "infidelity_at_N_max"]);
    let mut cuts: Vec<f64> = Vec::new();
    for (th, &mu) in thermals.iter().zip(&f.mu_values) {
        let field = build_thermal_lattice(th, &trap, radius)?;
        if cuts.is_empty() {
            cuts = site_radii(&field).into_iter().filter(|&r| r <= f.r_max_um).collect();
        }
        for &iterations in &f.iterations {
            let schedule =
                Schedule::filter_and_merge(cfg.schedule.n_max, iterations, cfg.schedule.axis, cfg.schedule.mode, errors)?;
            let stages = field.run_with(&schedule, &table)?;
            let curve = infidelity_curve(stages.last().expect("filter step"), &cuts)?;
            let best = curve.iter().filter(|p| p.infidelity <= f.max_infidelity).max_by_key(|p| p.n_sites);
            summary.push(vec![
                mu.into(),
                iterations.into(),
                best.map_or(0, |p| p.n_sites).into(),
                best.map_or(0.0, |p| p.infidelity).into(),
            ]);
            columns.push(format!("infidelity_mu{mu}_iter{iterations}"));
            curves.push(curve);
        }
    }
    let mut out = Table::new("fig7", columns).unit("r_cut_um", "um").unit("infidelity_*", "1 - overlap");
    for (k, &r) in cuts.iter().enumerate() {
        let mut row: Vec<Cell> = vec![r.into(), curves[0][k].n_sites.into()];
        row.extend(curves.iter().map(|c| Cell::from(c[k].infidelity)));
        out.push(row);
    }
    Ok(vec![Artifact::Csv(out), Artifact::Csv(summary)])
}

fn table1(cfg: &RunConfig) -> Result<Vec<Artifact>, CliError> {
    let matrix = InteractionMatrix::<f64>::compute(DEFAULT_NU_MAX, 1.0)?;
    let mut out = Table::with_columns(
        "table1",
        &["n_left", "n_middle", "n_right", "n_middle_final", "ground_occupied"],
    );
    let mut traces = Vec::new();
    for idx in 0..8 {
        let occ = occupancies_of(idx);
        let outcome = merge_protocol(occ, &matrix)?;
        out.push(vec![
            occ[0].into(),
            occ[1].into(),
            occ[2].into(),
            outcome.middle_final.len().into(),
            outcome.ground_occupied.into(),
        ]);
        traces.push(json!({ "input": occ, "outcome": outcome }));
    }
    let doc = json!({
        "experiment": "table1",
        "format_version": crate::table::FORMAT_VERSION,
        "config_sha256": cfg.sha256(),
        "seed": cfg.run.seed,
        "traces": traces,
    });
    let mut json = serde_json::to_string_pretty(&doc).expect("trace serializes");
    json.push('\n');

    let mut spectators = Table::with_columns(
        "table1_spectators",
        &["pulse", "spectator", "source", "detuning_u00", "separation_u00"],
    )
    .unit("detuning_u00", "U_00")
    .unit("separation_u00", "U_00");
    let shifts = merge_spectator_shifts(&matrix)?
        .into_iter()
        .chain(filter_spectator_shifts(cfg.schedule.n_max, &matrix)?);
    for s in shifts {
        spectators.push(vec![
            s.pulse.into(),
            s.spectator.to_string().into(),
            s.source.to_string().into(),
            s.detuning.into(),
            s.separation.into(),
        ]);
    }
    Ok(vec![
        Artifact::Csv(out),
        Artifact::Csv(spectators),
        Artifact::Text { file_name: "table1_trace.json".into(), contents: json },
    ])
}

fn mode_name(mode: IterationMode) -> &'static str {
    match mode {
        IterationMode::Parallel => "parallel",
        IterationMode::Serial => "serial",
    }
}

fn mc_validate(cfg: &RunConfig) -> Result<Vec<Artifact>, CliError> {
    let mc = &cfg.mc;
    let errors = ScheduleErrors { eps_floor: 0.0, ..cfg.schedule_errors()? };
    let mut out = Table::with_columns(
        "mc_validate",
        &[
            "mode",
            "epsilon0",
            "iteration",
            "realizations",
            "analytic_vacancy",
            "empirical_vacancy",
            "sigma",
            "deviation_sigma",
        ],
    );
    for &mode in &mc.modes {
        let steps = vec![Step::Merge { axis: MergeAxis::Auxiliary, mode }; mc.iterations];
        let schedule = Schedule::new(steps, errors)?;
        for &eps in &mc.vacancies {
            let field = LatticeField::homogeneous(OccupationDistribution::binary(eps)?, 1.0, 0);
            let analytic = vacancy_recursion(eps, mc.iterations, mode)?;
            for (i, &expected) in analytic.iter().enumerate() {
                let report = monte_carlo_run(&field, &schedule.prefix(i + 1), cfg.run.seed, mc.realizations)?;
                let empirical = 1.0 - report.p1[0];
                let sigma = report.stderr[0];
                let deviation = if sigma > 0.0 { (empirical - expected) / sigma } else { 0.0 };
                out.push(vec![
                    mode_name(mode).into(),
                    eps.into(),
                    (i + 1).into(),
                    mc.realizations.into(),
                    expected.into(),
                    empirical.into(),
                    sigma.into(),
                    deviation.into(),
                ]);
            }
        }
    }
    Ok(vec![Artifact::Csv(out)])
}

fn candidate_row(label: &str, u00_hz: f64, c: &PulseCandidate<f64>, degenerate: bool) -> Vec<Cell> {
    vec![
        label.into(),
        u00_hz.into(),
        c.t_s.into(),
        c.spectator.into(),
        c.loss.into(),
        c.eps.into(),
        degenerate.into(),
    ]
}

fn pulse_opt(cfg: &RunConfig) -> Result<Vec<Artifact>, CliError> {
    let p = &cfg.pulse;
    let weights = cfg.objective_weights()?;
    let base = cfg.loss_model()?;
    let optimum = optimize_pulse(&base, &p.detunings_u00, &weights)?;

    let mut scan = Table::with_columns("pulse_opt", &["t_s", "chi_rad_s", "spectator", "loss", "eps"])
        .unit("t_s", "s")
        .unit("chi_rad_s", "rad/s");
    for c in &optimum.scan {
        scan.push(vec![c.t_s.into(), c.chi_rad_s.into(), c.spectator.into(), c.loss.into(), c.eps.into()]);
    }

    let mut summary = Table::with_columns(
        "pulse_opt_summary",
        &["label", "u00_hz", "t_s", "spectator", "loss", "eps", "degenerate"],
    )
    .unit("u00_hz", "Hz")
    .unit("t_s", "s");
    let mut scales = vec![p.u00_hz];
    for fp in &p.fit_points {
        if !scales.contains(&fp.u00_hz) {
            scales.push(fp.u00_hz);
        }
    }
    for (k, &u00) in scales.iter().enumerate() {
        let opt = if k == 0 {
            optimum.clone()
        } else {
            optimize_pulse(&LossModel::new(p.tau_s, u00)?, &p.detunings_u00, &weights)?
        };
        summary.push(candidate_row("grid_best", u00, &opt.grid_best, opt.degenerate));
        if let Some(c) = &opt.commensurate_best {
            summary.push(candidate_row("commensurate_best", u00, c, opt.degenerate));
        }
    }

    let mut fit_table = Table::with_columns(
        "pulse_opt_fit",
        &["u00_hz", "t_reported_s", "eps_reported", "t_commensurate_s", "eps_model", "w_loss", "rms_log_residual"],
    )
    .unit("u00_hz", "Hz")
    .unit("t_*", "s");
    if !p.fit_points.is_empty() {
        let binding = p.detunings_u00.iter().copied().map(f64::abs).fold(f64::INFINITY, f64::min);
        if binding > 0.0 {
            let fit = fit_loss_weight(p.tau_s, binding, &p.fit_points)?;
            for (point, t, model) in &fit.points {
                fit_table.push(vec![
                    point.u00_hz.into(),
                    point.t_s.into(),
                    point.eps.into(),
                    (*t).into(),
                    (*model).into(),
                    fit.w_loss.into(),
                    fit.rms_log_residual.into(),
                ]);
            }
        }
    }
    Ok(vec![Artifact::Csv(scan), Artifact::Csv(summary), Artifact::Csv(fit_table)])
}
