//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line;
//! run with `--nocapture` (and `--test-threads=1` for ordered output).

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use vibfilter::lattice::{monte_carlo_run, site_stages, LatticeField, MergeAxis, Schedule, ScheduleErrors, Step};
use vibfilter::oscillator::exact::relative_interaction_exact;
use vibfilter::oscillator::{InteractionMatrix, DEFAULT_NU_MAX};
use vibfilter::protocol::{merge_protocol, occupancies_of, vacancy_after_merge, vacancy_recursion, OutcomeTable};
use vibfilter::pulse::{excited_population, PulseSpec};
use vibfilter::thermo::{defect_probability, occupation_distribution, OccupationDistribution, ThermalParams};
use vibfilter::{IterationMode, VibLevel};
use vibfilter_cli::table::{Cell, Table};
use vibfilter_cli::{execute, run_experiment, Experiment, RunConfig};

fn report(name: &str, ok: bool, detail: String) {
    println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{name}: {detail}");
}

fn timed<R>(f: impl FnOnce() -> R) -> (R, Duration) {
    let start = Instant::now();
    let r = f();
    (r, start.elapsed())
}

fn num(c: &Cell) -> f64 {
    match c {
        Cell::Float(v) => *v,
        Cell::Int(v) => *v as f64,
        Cell::Text(s) => panic!("expected a number, got {s}"),
    }
}

fn text(c: &Cell) -> &str {
    match c {
        Cell::Text(s) => s,
        other => panic!("expected text, got {other:?}"),
    }
}

fn table(cfg: &RunConfig, exp: Experiment, name: &str) -> Table {
    run_experiment(exp, cfg)
        .unwrap()
        .into_iter()
        .filter_map(|a| a.table().cloned())
        .find(|t| t.name == name)
        .unwrap_or_else(|| panic!("{name} missing"))
}

fn column(t: &Table, name: &str) -> Vec<f64> {
    let k = t.columns().iter().position(|c| c == name).unwrap_or_else(|| panic!("column {name}"));
    t.rows().iter().map(|r| num(&r[k])).collect()
}

#[test]
fn interaction_matrix() {
    let (m, took) = timed(|| InteractionMatrix::<f64>::compute(DEFAULT_NU_MAX, 1.0).unwrap());
    let printed = [((0, 0), 1.0), ((0, 1), 1.0), ((1, 1), 0.75), ((0, 2), 0.75), ((1, 2), 0.875), ((2, 2), 0.64)];
    let mut worst_printed = 0.0f64;
    let mut worst_exact = 0.0f64;
    for ((a, b), value) in printed {
        let value: f64 = value;
        let q = m.get(VibLevel(a), VibLevel(b)).unwrap();
        let exact = relative_interaction_exact(a.into(), b.into());
        let exact = *exact.numer() as f64 / *exact.denom() as f64;
        worst_printed = worst_printed.max((q - value).abs());
        worst_exact = worst_exact.max((q - exact).abs());
    }
    let ok = worst_printed <= 1e-3 && worst_exact <= 1e-9 && took < Duration::from_secs(1);
    report(
        "interaction matrix",
        ok,
        format!("max |q - printed| = {worst_printed:.2e}, max |q - exact| = {worst_exact:.2e}, {took:?}"),
    );
}

#[test]
fn merge_outcome_table() {
    let expected = [0usize, 0, 1, 1, 0, 1, 1, 1];
    let (rows, took) = timed(|| {
        let m = InteractionMatrix::<f64>::compute(DEFAULT_NU_MAX, 1.0).unwrap();
        (0..8).map(|i| merge_protocol(occupancies_of(i), &m).unwrap().middle_final.len()).collect::<Vec<_>>()
    });
    let cli = table(&RunConfig::default(), Experiment::Table1, "table1");
    let cli_rows: Vec<usize> = column(&cli, "n_middle_final").iter().map(|&v| v as usize).collect();
    let ok = rows == expected && cli_rows == expected && took < Duration::from_secs(1);
    report("merge outcome table", ok, format!("final middle occupations {rows:?}, {took:?}"));
}

#[test]
fn merge_vacancy_formulas() {
    let m = InteractionMatrix::<f64>::compute(DEFAULT_NU_MAX, 1.0).unwrap();
    let tab = OutcomeTable::compute(&m).unwrap();
    let enum_err = [0.01f64, 0.1, 0.3]
        .iter()
        .map(|&e| (tab.merged_vacancy(e, e, e) - (2.0 * e * e - e * e * e)).abs())
        .fold(0.0, f64::max);

    let n = 1_000_000;
    let field = LatticeField::homogeneous(OccupationDistribution::binary(0.1).unwrap(), 1.0, 0);
    let step = Step::Merge { axis: MergeAxis::Auxiliary, mode: IterationMode::Parallel };
    let s = Schedule::new(vec![step], ScheduleErrors::default()).unwrap();
    let mc = monte_carlo_run(&field, &s, 2024, n).unwrap();
    let empirical = 1.0 - mc.p1[0];
    let sigma = (0.019f64 * 0.981 / n as f64).sqrt();
    let z = (empirical - 0.019) / sigma;

    let par = vacancy_recursion(0.1f64, 2, IterationMode::Parallel).unwrap();
    let ser = vacancy_recursion(0.1f64, 2, IterationMode::Serial).unwrap();
    let e1 = vacancy_after_merge(0.1f64);
    let par_ok = (par[1] - (2.0 * e1 * e1 - e1.powi(3))).abs() < 1e-15;
    let ser_ok = (ser[1] - (2.0 * e1 * 0.1 - e1 * 0.01)).abs() < 1e-15 && par[0] == ser[0];

    let ok = enum_err <= 1e-12 && z.abs() <= 3.0 && par_ok && ser_ok;
    report(
        "merge vacancy formulas",
        ok,
        format!(
            "enumeration error {enum_err:.1e}; MC vacancy {empirical:.5} over {n} triples ({z:+.2} sigma); \
             two-step parallel {:.4e}, serial {:.4e}",
            par[1], ser[1]
        ),
    );
}

#[test]
fn headline_defect_reduction() {
    let ((initial, merged), took) = timed(|| {
        let d = occupation_distribution(&ThermalParams::with_default_cap(0.5, 0.1).unwrap());
        let m = InteractionMatrix::<f64>::compute(DEFAULT_NU_MAX, 1.0).unwrap();
        let s = Schedule::filter_and_merge(10, 1, MergeAxis::Auxiliary, IterationMode::Parallel, Default::default())
            .unwrap();
        let stages = site_stages(&d, &s, &OutcomeTable::compute(&m).unwrap()).unwrap();
        (defect_probability(&d), defect_probability(stages.last().unwrap()))
    });
    let ok = (0.8e-2..=2.0e-2).contains(&initial) && (0.5e-4..=2.0e-4).contains(&merged) && took < Duration::from_secs(1);
    report("headline defect reduction", ok, format!("defect {initial:.3e} -> {merged:.3e}, {took:?}"));
}

#[test]
fn defect_vs_temperature_shape() {
    let t = table(&RunConfig::default(), Experiment::Fig4, "fig4");
    let init = column(&t, "defect_initial");
    let filt = column(&t, "defect_filtered");
    let it1 = column(&t, "defect_iter1");
    let it2 = column(&t, "defect_iter2");
    let increasing = init.windows(2).all(|w| w[1] > w[0]);
    let ordered = (0..init.len()).all(|k| it1[k] <= filt[k] && filt[k] <= init[k] && it2[k] <= it1[k]);
    report(
        "defect vs temperature shape",
        increasing && ordered && init.len() == 50,
        format!("{} grid points, initial increasing: {increasing}, curves ordered: {ordered}", init.len()),
    );
}

#[test]
fn radial_profiles() {
    let cfg = RunConfig::default();
    let ((plateau, peaks), took) = timed(|| {
        (table(&cfg, Experiment::Fig5, "fig5_plateau"), table(&cfg, Experiment::Fig6, "fig6_peaks"))
    });
    let radius = |stage: &str| -> Option<f64> {
        plateau.rows().iter().find(|r| text(&r[0]) == stage).and_then(|r| (num(&r[2]) == 1.0).then(|| num(&r[3])))
    };
    let (m1, m2) = (radius("merge1"), radius("merge2"));
    let grows = match (m1, m2) {
        (None, Some(_)) => true,
        (Some(a), Some(b)) => b > a,
        _ => false,
    };
    let mut worst = 0.0f64;
    let mut outside = true;
    for stage in ["filtered", "merge1", "merge2"] {
        let row = peaks.rows().iter().find(|r| text(&r[0]) == stage).unwrap();
        worst = worst.max((num(&row[3]) - 2f64.ln()).abs());
        outside &= num(&row[1]) == 1.0 && num(&row[2]) > radius(stage).unwrap_or(0.0);
    }
    let ok = grows && worst <= 1e-6 && outside && took < Duration::from_secs(10);
    report(
        "radial profiles",
        ok,
        format!("plateau after merge 1 {m1:?}, after merge 2 {m2:?}; |S_max - ln 2| = {worst:.1e}; peak outside plateau: {outside}; {took:?}"),
    );
}

#[test]
fn overlap_vs_system_size() {
    let summary = table(&RunConfig::default(), Experiment::Fig7, "fig7_summary");
    let n_max = |mu: f64, iters: f64| {
        summary
            .rows()
            .iter()
            .find(|r| num(&r[0]) == mu && num(&r[1]) == iters)
            .map(|r| num(&r[2]))
            .unwrap()
    };
    let merged = n_max(0.5, 3.0);
    let filtered = n_max(2.0, 0.0);
    let ok = (50.0..=200.0).contains(&merged) && (100.0..=400.0).contains(&filtered);
    report(
        "overlap vs system size",
        ok,
        format!("N at 1-OL <= 1e-2: mu 0.5 three merges {merged}, mu 2 filter only {filtered}"),
    );
}

#[test]
fn rabi_model() {
    let resonant = [1.0, 3.7, 1e3, 2.5e5].iter().all(|&chi| {
        excited_population(&PulseSpec::new(chi, 0.0, PI / chi).unwrap()) == 1.0
    });
    let mut runner = TestRunner::new_with_rng(
        Config { cases: 10_000, failure_persistence: None, ..Config::default() },
        proptest::test_runner::TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
    );
    let props = runner.run(&(1.0f64..1e5, -1e5f64..1e5, 0.0f64..0.1), |(chi, delta, t)| {
        let p = PulseSpec::new(chi, delta, t).unwrap();
        let pe = excited_population(&p);
        let bound = chi * chi / (chi * chi + delta * delta);
        prop_assert!(pe >= 0.0 && pe <= bound * (1.0 + 1e-12) + 1e-15);
        let period = 2.0 * PI / p.generalized_rabi();
        let later = excited_population(&PulseSpec::new(chi, delta, t + period).unwrap());
        prop_assert!((later - pe).abs() <= 1e-11 * (t / period + 1.0));
        Ok(())
    });
    report(
        "rabi model",
        resonant && props.is_ok(),
        format!("resonant pi pulse exact: {resonant}; bound and periodicity over 10000 specs: {props:?}"),
    );
}

#[test]
fn pulse_optimization() {
    let cfg = RunConfig::default();
    let a = run_experiment(Experiment::PulseOpt, &cfg).unwrap();
    let b = run_experiment(Experiment::PulseOpt, &cfg).unwrap();
    let summary = a.iter().filter_map(|x| x.table()).find(|t| t.name == "pulse_opt_summary").unwrap();
    let fit = a.iter().filter_map(|x| x.table()).find(|t| t.name == "pulse_opt_fit").unwrap();
    let w = column(fit, "w_loss")[0];
    let eps20 = summary
        .rows()
        .iter()
        .find(|r| text(&r[0]) == "commensurate_best" && num(&r[1]) == 20_000.0)
        .map(|r| num(&r[5]))
        .unwrap();
    let ok = a == b && w.is_finite() && w > 0.0 && eps20 <= 1e-3 && cfg.pulse.tau_s == 1.0;
    report(
        "pulse optimization",
        ok,
        format!("deterministic: {}; best-fit loss weight {w:.4}; commensurate optimum at 20 kHz eps = {eps20:.3e}", a == b),
    );
}

#[test]
fn determinism() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(&config, "[run]\nseed = 7\n[mc]\nrealizations = 20000\n").unwrap();
    let mut mismatched = Vec::new();
    let mut files = 0;
    for exp in Experiment::ALL {
        let first = execute(exp, &config, None, Some(dir.path().join("a"))).unwrap();
        let second = execute(exp, &config, None, Some(dir.path().join("b"))).unwrap();
        for (p, q) in first.iter().zip(&second) {
            files += 1;
            if std::fs::read(p).unwrap() != std::fs::read(q).unwrap() {
                mismatched.push(p.file_name().unwrap().to_string_lossy().into_owned());
            }
        }
    }
    report(
        "determinism",
        mismatched.is_empty() && files > 0,
        format!("{files} files from {} experiments compared, mismatches: {mismatched:?}", Experiment::ALL.len()),
    );
}
