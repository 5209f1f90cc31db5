use std::collections::BTreeMap;
use std::io::Write;

use prefattach_core::closed_form::{p_closed, p_closed_both, p_closed_float};
use prefattach_core::recurrence::{general_node_table, scaled_table};
use prefattach_core::simulator::{run_trials, SimulationConfig, SimulationMode};
use prefattach_core::ExactRational;
use serde::Serialize;

use crate::output::{approx_log, approx_rational, emit, render_csv, render_json, Format, OutputRecord};
use crate::{CliError, ClosedArgs, ClosedMode, SimMode, SimulateArgs, TableArgs};

#[derive(Serialize)]
struct TableParams {
    m: usize,
    n_max: usize,
    scaled: bool,
}

pub(crate) fn table(args: &TableArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let records = if args.scaled {
        if args.m != 1 {
            return Err(CliError::Usage(
                "--scaled is only defined for the first node (m = 1)".into(),
            ));
        }
        let table = scaled_table(args.n_max)?;
        let mut records = Vec::new();
        for n in 1..=args.n_max {
            for (i, a) in table.row(n).unwrap_or_default().iter().enumerate() {
                records.push(OutputRecord::ScaledRow {
                    m: 1,
                    n,
                    k: i + 1,
                    exact: a.to_fraction_string(),
                    approx: approx_rational(a),
                });
            }
        }
        records
    } else {
        let table = general_node_table(args.m, args.n_max)?;
        table
            .rows()
            .iter()
            .flat_map(|row| {
                row.iter().map(move |(k, p)| OutputRecord::ProbRow {
                    m: row.birth(),
                    n: row.time(),
                    k,
                    exact: Some(p.to_fraction_string()),
                    approx: approx_rational(p),
                })
            })
            .collect()
    };
    let params = TableParams {
        m: args.m,
        n_max: args.n_max,
        scaled: args.scaled,
    };
    let bytes = match args.out.format.unwrap_or(Format::Csv) {
        Format::Csv => render_csv(&records)?,
        Format::Json => render_json("table", &params, &records)?,
    };
    emit(&bytes, args.out.output.as_deref(), stdout)
}

#[derive(Serialize)]
struct ClosedParams {
    n: usize,
    k: usize,
    mode: &'static str,
}

pub(crate) fn closed(args: &ClosedArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let (value, mode) = match args.mode {
        ClosedMode::Exact => (p_closed(args.n, args.k)?, "exact"),
        ClosedMode::Float => (p_closed_float(args.n, args.k)?, "float"),
        ClosedMode::Both => (p_closed_both(args.n, args.k)?, "both"),
    };
    let exact = value.exact.as_ref().map(ExactRational::to_fraction_string);
    let approx = match (&value.approx, &value.exact) {
        (Some(f), _) => approx_log(f),
        (None, Some(e)) => approx_rational(e),
        (None, None) => unreachable!("closed-form value carries at least one representation"),
    };
    let bytes = match args.out.format {
        None => {
            let line = match args.mode {
                ClosedMode::Exact => exact.clone().unwrap_or_default(),
                ClosedMode::Float => approx.clone(),
                ClosedMode::Both => format!("{} {}", exact.clone().unwrap_or_default(), approx),
            };
            format!("{line}\n").into_bytes()
        }
        Some(format) => {
            let records = [OutputRecord::ProbRow {
                m: value.m,
                n: value.n,
                k: value.k,
                exact,
                approx,
            }];
            let params = ClosedParams {
                n: args.n,
                k: args.k,
                mode,
            };
            match format {
                Format::Csv => render_csv(&records)?,
                Format::Json => render_json("closed", &params, &records)?,
            }
        }
    };
    emit(&bytes, args.out.output.as_deref(), stdout)
}

#[derive(Serialize)]
struct SimulateParams {
    mode: &'static str,
    m: usize,
    n: usize,
    trials: u64,
    seed: u64,
}

fn mode_name(mode: SimMode) -> &'static str {
    match mode {
        SimMode::Marginal => "marginal",
        SimMode::Graph => "graph",
    }
}

pub(crate) fn simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mode = match args.mode {
        SimMode::Marginal => SimulationMode::Marginal,
        SimMode::Graph => SimulationMode::Graph,
    };
    let dist = run_trials(&SimulationConfig {
        mode,
        birth: args.m,
        horizon: args.n,
        trials: args.trials,
        master_seed: args.seed,
    })?;
    let params = SimulateParams {
        mode: mode_name(args.mode),
        m: args.m,
        n: args.n,
        trials: args.trials,
        seed: args.seed,
    };
    let bytes = match args.out.format.unwrap_or(Format::Json) {
        Format::Json => {
            let counts: BTreeMap<usize, u64> = dist.counts().iter().enumerate().map(|(i, &c)| (i + 1, c)).collect();
            let record = OutputRecord::Empirical {
                mode: params.mode.to_string(),
                m: dist.birth(),
                n: dist.horizon(),
                master_seed: dist.master_seed(),
                trials: dist.trials(),
                counts,
            };
            render_json("simulate", &params, &[record])?
        }
        Format::Csv => {
            let mut records = Vec::with_capacity(dist.counts().len());
            for (i, &c) in dist.counts().iter().enumerate() {
                let freq = ExactRational::new(c, dist.trials())?;
                records.push(OutputRecord::ProbRow {
                    m: dist.birth(),
                    n: dist.horizon(),
                    k: i + 1,
                    exact: Some(freq.to_fraction_string()),
                    approx: approx_rational(&freq),
                });
            }
            render_csv(&records)?
        }
    };
    emit(&bytes, args.out.output.as_deref(), stdout)
}
