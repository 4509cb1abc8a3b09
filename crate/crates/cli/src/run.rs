//! Scenario execution.

use std::time::Instant;

use collapse_lab::classical::{classical_cmo_check, total_probability_check, total_variance_check};
use collapse_lab::coherence::{
    coherence_audit, coherence_witness, qubit_oracle, qubit_pipeline, qubit_x,
    trace_distance_to_dephased, variational_trace_distance, AngularGrid, QubitClosedForms,
};
use collapse_lab::linalg::{inner, unitary_exp};
use collapse_lab::protocols::{
    cmo_limit_probe, direct_distribution, post_measurement_distribution, sample_records_sharded,
    MeasurementStep,
};
use collapse_lab::quantum::{born_distribution, dephase, evolve};
use collapse_lab::{tolerance, CoherenceReport, DensityMatrix, Observable, VERSION};

use crate::config::{Resolved, ScenarioConfig, ScenarioKind};
use crate::error::{CliError, Result};
use crate::report::{RunReport, Table};

/// Worker threads for sampling: `COLLAPSE_LAB_THREADS` if set, else all cores.
pub fn worker_count() -> usize {
    std::env::var("COLLAPSE_LAB_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

pub fn run(config: &ScenarioConfig) -> Result<RunReport> {
    run_with_workers(config, worker_count())
}

pub fn run_with_workers(config: &ScenarioConfig, workers: usize) -> Result<RunReport> {
    let start = Instant::now();
    let resolved = config.resolve()?;
    let context = config.kind.name();
    let wrap = CliError::runtime;
    let (tables, coherence) = match config.kind {
        ScenarioKind::CmoProbe => (cmo_probe(&resolved).map_err(wrap(context))?, None),
        ScenarioKind::TwoMeasurement => (
            two_measurement(&resolved, config, workers).map_err(wrap(context))?,
            None,
        ),
        ScenarioKind::ClassicalCheck => (classical_check(&resolved).map_err(wrap(context))?, None),
        ScenarioKind::CoherenceAudit => {
            let tol = config.tolerance.unwrap_or(tolerance::COHERENCE_THRESHOLD);
            let (tables, report) = audit(&resolved, tol).map_err(wrap(context))?;
            (tables, Some(report))
        }
        ScenarioKind::QubitSweep => (qubit_sweep(&resolved).map_err(wrap(context))?, None),
    };
    Ok(RunReport {
        scenario: config.clone(),
        tables,
        coherence,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        version: VERSION.to_string(),
        seed: config.seed,
    })
}

type Outcome<T> = collapse_lab::Result<T>;

fn parts(r: &Resolved) -> (&DensityMatrix, &Observable) {
    (
        r.state.as_ref().expect("validated"),
        r.x.as_ref().expect("validated"),
    )
}

fn cmo_probe(r: &Resolved) -> Outcome<Vec<Table>> {
    let (rho, x) = parts(r);
    let h = r.hamiltonian.as_ref().expect("validated");
    let probe = cmo_limit_probe(rho, x, h, &r.t_grid)?;
    let d = x.dim();

    let mut first = Table::new("first_measurement", &["label", "probability"]);
    for (label, p) in probe.first.labels().iter().zip(probe.first.probs()) {
        first.push(vec![*label, *p]);
    }

    let mut columns = vec!["t".to_string()];
    for n in 0..d {
        for m in 0..d {
            columns.push(format!("p_{m}_given_{n}"));
        }
    }
    let mut conditional = Table::with_columns("conditional", columns);
    for row in &probe.rows {
        let mut values = vec![row.t];
        values.extend(row.matrix.iter().flatten());
        conditional.push(values);
    }

    let mut exponents = Table::new(
        "exponents",
        &["from_label", "to_label", "exponent", "points_used"],
    );
    for fit in &probe.exponents {
        if let Some(k) = fit.exponent {
            exponents.push(vec![
                probe.labels[fit.from],
                probe.labels[fit.to],
                k,
                fit.points_used as f64,
            ]);
        }
    }
    Ok(vec![first, conditional, exponents])
}

fn two_measurement(r: &Resolved, config: &ScenarioConfig, workers: usize) -> Outcome<Vec<Table>> {
    let (rho, x) = parts(r);
    let y = r.y.as_ref().expect("validated");
    let wait = config.wait;
    let steps = [
        MeasurementStep::immediate(x.clone()),
        MeasurementStep::new(y.clone(), wait, r.hamiltonian.clone())?,
    ];
    let record = sample_records_sharded(rho, &steps, config.seed, config.shots, workers)?;

    // exact statistics of y, with and without the intervening x measurement
    let propagator = match (&r.hamiltonian, wait > 0.0) {
        (Some(h), true) => Some(unitary_exp(h, wait)?),
        _ => None,
    };
    let (direct, post) = match &r.hamiltonian {
        Some(h) if wait > 0.0 => (
            born_distribution(&evolve(rho, h, wait)?, y)?,
            born_distribution(&evolve(&dephase(rho, x)?, h, wait)?, y)?,
        ),
        _ => (
            direct_distribution(rho, y)?,
            post_measurement_distribution(rho, x, y)?,
        ),
    };

    let first_exact = born_distribution(rho, x)?;
    let first_empirical = record.marginal(0)?;
    let mut first = Table::new("first_measurement", &["label", "probability", "empirical"]);
    for n in 0..x.dim() {
        first.push(vec![
            x.labels()[n],
            first_exact.prob(n),
            first_empirical.prob(n),
        ]);
    }

    let second_empirical = record.marginal(1)?;
    let mut second = Table::new(
        "second_measurement",
        &["label", "p_direct", "p_post", "residual", "empirical"],
    );
    for m in 0..y.dim() {
        second.push(vec![
            y.labels()[m],
            direct.prob(m),
            post.prob(m),
            direct.prob(m) - post.prob(m),
            second_empirical.prob(m),
        ]);
    }

    let mut joint = Table::new(
        "joint",
        &["x_label", "y_label", "probability", "count", "frequency"],
    );
    for n in 0..x.dim() {
        let mut xn = x.eigenvector(n);
        if let Some(u) = &propagator {
            xn = u.apply(&xn);
        }
        for m in 0..y.dim() {
            let exact = first_exact.prob(n) * inner(&y.eigenvector(m), &xn).norm_sqr();
            let count = record
                .empirical_joint
                .get(&vec![n, m])
                .copied()
                .unwrap_or(0);
            joint.push(vec![
                x.labels()[n],
                y.labels()[m],
                exact,
                count as f64,
                count as f64 / record.shots as f64,
            ]);
        }
    }
    Ok(vec![first, second, joint])
}

fn max_deviation_from_identity(m: &[Vec<f64>]) -> f64 {
    let mut worst = 0.0_f64;
    for (n, row) in m.iter().enumerate() {
        for (k, v) in row.iter().enumerate() {
            worst = worst.max((v - if n == k { 1.0 } else { 0.0 }).abs());
        }
    }
    worst
}

fn classical_check(r: &Resolved) -> Outcome<Vec<Table>> {
    let sys = r.classical.as_ref().expect("validated");
    let cmo = classical_cmo_check(sys, &r.t_grid)?;
    let mut repeat = Table::new("repeat_measurement", &["t", "max_deviation_from_identity"]);
    repeat.push(vec![0.0, max_deviation_from_identity(&cmo.at_zero)]);
    for (t, matrix) in &cmo.rows {
        repeat.push(vec![*t, max_deviation_from_identity(matrix)]);
    }

    let mut probability = Table::new("total_probability", &["y_label", "probability", "residual"]);
    for ((label, cell), residual) in sys.y_cells().iter().zip(total_probability_check(sys)?) {
        probability.push(vec![*label, sys.probability(cell), residual]);
    }

    let check = total_variance_check(sys)?;
    let mut variance = Table::new("total_variance", &["lhs", "rhs", "residual"]);
    variance.push(vec![check.lhs, check.rhs, check.residual]);
    Ok(vec![repeat, probability, variance])
}

fn audit(r: &Resolved, tol: f64) -> Outcome<(Vec<Table>, CoherenceReport)> {
    let (rho, x) = parts(r);
    let y = r.y.as_ref().expect("validated");
    let report = coherence_audit(rho, x, y, tol)?;

    let mut summary = Table::new(
        "coherence",
        &[
            "variance_lhs",
            "variance_rhs",
            "variance_gap",
            "trace_distance",
            "max_total_prob_violation",
            "max_coherence",
            "incoherent",
            "tolerance",
        ],
    );
    summary.push(vec![
        report.variance_lhs,
        report.variance_rhs,
        report.variance_gap,
        report.trace_distance,
        report.max_total_prob_violation,
        report.max_coherence,
        if report.incoherent { 1.0 } else { 0.0 },
        report.tolerance_used,
    ]);

    let direct = direct_distribution(rho, y)?;
    let post = post_measurement_distribution(rho, x, y)?;
    let mut second = Table::new(
        "second_measurement",
        &["label", "p_direct", "p_post", "residual"],
    );
    for m in 0..y.dim() {
        second.push(vec![
            y.labels()[m],
            direct.prob(m),
            post.prob(m),
            direct.prob(m) - post.prob(m),
        ]);
    }

    let witness = coherence_witness(rho, x)?;
    let mut witness_table = Table::new("witness", &["label", "residual"]);
    for (label, residual) in witness.observable.labels().iter().zip(&witness.residual) {
        witness_table.push(vec![*label, *residual]);
    }

    let mut tables = vec![summary, second, witness_table];
    if x.dim() == 2 {
        let best = variational_trace_distance(rho, x, AngularGrid::default())?;
        let mut variational =
            Table::new("variational", &["value", "theta", "phi", "trace_distance"]);
        variational.push(vec![
            best.value,
            best.theta,
            best.phi,
            report.trace_distance,
        ]);
        tables.push(variational);
    }
    Ok((tables, report))
}

fn closed_form_row(forms: &QubitClosedForms) -> [f64; 4] {
    [
        forms.p_post[0],
        forms.p_post[1],
        forms.p_direct[0],
        forms.p_direct[1],
    ]
}

fn qubit_sweep(r: &Resolved) -> Outcome<Vec<Table>> {
    let mut sweep = Table::new(
        "sweep",
        &[
            "p",
            "gamma_re",
            "gamma_im",
            "theta",
            "phi",
            "oracle_post_minus",
            "oracle_post_plus",
            "oracle_direct_minus",
            "oracle_direct_plus",
            "pipeline_post_minus",
            "pipeline_post_plus",
            "pipeline_direct_minus",
            "pipeline_direct_plus",
            "trace_distance",
            "max_abs_diff",
        ],
    );
    let x = qubit_x();
    let mut overall = 0.0_f64;
    for params in &r.sweep {
        let oracle = closed_form_row(&qubit_oracle(params));
        let pipeline = closed_form_row(&qubit_pipeline(params)?);
        let diff = oracle
            .iter()
            .zip(&pipeline)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        overall = overall.max(diff);
        let g = params.gamma();
        let mut row = vec![params.p(), g.re, g.im, params.theta(), params.phi()];
        row.extend(oracle);
        row.extend(pipeline);
        row.push(trace_distance_to_dephased(&params.state()?, &x)?);
        row.push(diff);
        sweep.push(row);
    }
    let mut summary = Table::new("summary", &["points", "max_abs_diff"]);
    summary.push(vec![r.sweep.len() as f64, overall]);
    Ok(vec![sweep, summary])
}
