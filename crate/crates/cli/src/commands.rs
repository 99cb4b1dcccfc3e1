//! The five batch commands: simulate, generator, correlation, laplace,
//! converge. Each writes its tables through [`OutputSink`] and returns once
//! the manifest is on disk.

use serde::Serialize;

use altbm_core::estimation::{
    convergence_sweep, mc_correlation, Driver, SweepConstruction, SweepTable,
};
use altbm_core::exp_alt::{
    build_exp_alt_generator, corr_exp, cov_laplace_exp, simulate_exp_alt, SimMode,
};
use altbm_core::flipflop::{
    build_independent_bivariate_generator, build_standard_generator, wh_couple, wh_couple_horizon,
    CoupledPair, GeneratorMatrix,
};
use altbm_core::map_alt::{corr_map_with, cov_laplace, simulate_map_alt};
use altbm_core::paths::FluidPath;
use altbm_core::sampling::RandomStream;

use crate::config::{CommandKind, Construction, Plan};
use crate::output::{Cell, CsvTable, OutputSink};
use crate::svg::{Chart, Series, PALETTE};
use crate::CliError;

pub fn run(plan: &Plan) -> Result<(), CliError> {
    let mut sink = OutputSink::new(&plan.output_dir)?;
    match plan.command {
        CommandKind::Simulate => simulate(plan, &mut sink)?,
        CommandKind::Generator => generator(plan, &mut sink)?,
        CommandKind::Correlation => correlation(plan, &mut sink)?,
        CommandKind::Laplace => laplace(plan, &mut sink)?,
        CommandKind::Converge => converge(plan, &mut sink)?,
    }
    sink.finish_manifest(plan.command.name(), plan.seed, &plan.resolved)
}

fn meta_cells(plan: &Plan) -> [Cell; 2] {
    [Cell::Int(plan.seed), Cell::Text(plan.params_summary())]
}

// --- simulate ---------------------------------------------------------------

fn sim_mode(plan: &Plan) -> SimMode {
    match (plan.epochs, plan.horizon) {
        (Some(k), _) => SimMode::Epochs(k),
        (None, Some(h)) => SimMode::Horizon(h),
        (None, None) => unreachable!("validated"),
    }
}

fn simulate(plan: &Plan, sink: &mut OutputSink) -> Result<(), CliError> {
    let stream = RandomStream::new(plan.seed);
    let lambda = plan.lambda.expect("validated");
    match &plan.construction {
        Construction::Standard => {
            let pair = match sim_mode(plan) {
                SimMode::Epochs(k) => wh_couple(lambda, k, &stream),
                SimMode::Horizon(h) => wh_couple_horizon(lambda, h, &stream),
            };
            write_skeleton(plan, sink, &pair)?;
            if plan.formats.svg {
                write_path_chart(plan, sink, pair.fluid(), None)?;
            }
        }
        Construction::ExpAlt(params) => {
            let real = simulate_exp_alt(params, lambda, sim_mode(plan), &stream)?;
            let signs = path_interval_signs(&real.path.signs, real.coupled.count());
            write_bivariate(plan, sink, &real.path.fluid1, &real.path.fluid2, &signs)?;
            if plan.formats.svg {
                write_path_chart(plan, sink, &real.path.fluid1, Some(&real.path.fluid2))?;
            }
        }
        Construction::MapAlt { map, gamma } => {
            let real = simulate_map_alt(map, *gamma, lambda, sim_mode(plan), &stream)?;
            let signs = path_interval_signs(&real.path.signs, real.coupled.count());
            write_bivariate(plan, sink, &real.path.fluid1, &real.path.fluid2, &signs)?;
            if plan.formats.svg {
                write_path_chart(plan, sink, &real.path.fluid1, Some(&real.path.fluid2))?;
            }
        }
    }
    Ok(())
}

/// Copy/mirror sign per flip-flop breakpoint interval (two per coupled
/// interval, plus the closing breakpoint).
fn path_interval_signs(signs: &[i8], count: usize) -> Vec<i8> {
    let mut out = Vec::with_capacity(2 * count + 1);
    for &sign in &signs[..count] {
        out.push(sign);
        out.push(sign);
    }
    out.push(*signs.last().unwrap_or(&1));
    out
}

fn write_skeleton(plan: &Plan, sink: &mut OutputSink, pair: &CoupledPair) -> Result<(), CliError> {
    let mut table = CsvTable::new(&["k", "theta", "chi", "c", "m", "seed", "params"]);
    let skeleton = pair.skeleton();
    for k in 1..=pair.count() {
        let [seed, params] = meta_cells(plan);
        table.push(vec![
            Cell::Int(k as u64),
            Cell::Float(skeleton.epochs()[k]),
            Cell::Float(pair.chi()[k]),
            Cell::Float(skeleton.values()[k]),
            Cell::Float(skeleton.minima()[k - 1]),
            seed,
            params,
        ])?;
    }
    if plan.formats.csv {
        sink.write_csv("simulate.csv", &table)?;
    }
    if plan.formats.json {
        #[derive(Serialize)]
        struct Row {
            k: usize,
            theta: f64,
            chi: f64,
            c: f64,
            m: f64,
        }
        let rows: Vec<Row> = (1..=pair.count())
            .map(|k| Row {
                k,
                theta: skeleton.epochs()[k],
                chi: pair.chi()[k],
                c: skeleton.values()[k],
                m: skeleton.minima()[k - 1],
            })
            .collect();
        sink.write_json("simulate.json", &rows)?;
    }
    Ok(())
}

fn write_bivariate(
    plan: &Plan,
    sink: &mut OutputSink,
    fluid1: &FluidPath,
    fluid2: &FluidPath,
    signs: &[i8],
) -> Result<(), CliError> {
    let mut table = CsvTable::new(&["t", "f1", "f2", "j1", "j2", "sync", "seed", "params"]);
    let breakpoints = fluid1.breakpoints();
    for (i, &t) in breakpoints.iter().enumerate() {
        let slope_idx = i.min(fluid1.slopes().len() - 1);
        let j1 = fluid1.slopes()[slope_idx].signum() as i64;
        let j2 = fluid2.slopes()[slope_idx].signum() as i64;
        let [seed, params] = meta_cells(plan);
        table.push(vec![
            Cell::Float(t),
            Cell::Float(fluid1.levels()[i]),
            Cell::Float(fluid2.levels()[i]),
            Cell::SignedInt(j1),
            Cell::SignedInt(j2),
            Cell::Int(u64::from(signs[i] > 0)),
            seed,
            params,
        ])?;
    }
    if plan.formats.csv {
        sink.write_csv("simulate.csv", &table)?;
    }
    if plan.formats.json {
        #[derive(Serialize)]
        struct Row {
            t: f64,
            f1: f64,
            f2: f64,
            j1: i8,
            j2: i8,
            sync: u8,
        }
        let rows: Vec<Row> = breakpoints
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let slope_idx = i.min(fluid1.slopes().len() - 1);
                Row {
                    t,
                    f1: fluid1.levels()[i],
                    f2: fluid2.levels()[i],
                    j1: fluid1.slopes()[slope_idx].signum() as i8,
                    j2: fluid2.slopes()[slope_idx].signum() as i8,
                    sync: u8::from(signs[i] > 0),
                }
            })
            .collect();
        sink.write_json("simulate.json", &rows)?;
    }
    Ok(())
}

fn write_path_chart(
    plan: &Plan,
    sink: &mut OutputSink,
    fluid1: &FluidPath,
    fluid2: Option<&FluidPath>,
) -> Result<(), CliError> {
    let mut series = vec![Series {
        name: "F1".into(),
        points: fluid1
            .breakpoints()
            .iter()
            .zip(fluid1.levels())
            .map(|(&t, &v)| (t, v))
            .collect(),
        color: PALETTE[0],
        draw_markers: false,
    }];
    if let Some(second) = fluid2 {
        series.push(Series {
            name: "F2".into(),
            points: second
                .breakpoints()
                .iter()
                .zip(second.levels())
                .map(|(&t, &v)| (t, v))
                .collect(),
            color: PALETTE[1],
            draw_markers: false,
        });
    }
    let chart = Chart {
        title: format!("fluid path, {}", plan.params_summary()),
        x_label: "t".into(),
        y_label: "level".into(),
        log_x: false,
        log_y: false,
        series,
    };
    sink.write_text("simulate.svg", &chart.render())
}

// --- generator ---------------------------------------------------------------

#[derive(Serialize)]
struct GeneratorJson {
    states: Vec<String>,
    matrix: Vec<Vec<f64>>,
}

fn generator_json(g: &GeneratorMatrix) -> GeneratorJson {
    GeneratorJson {
        states: g.labels().to_vec(),
        matrix: g.matrix().to_rows(),
    }
}

fn generator(plan: &Plan, sink: &mut OutputSink) -> Result<(), CliError> {
    let lambda = plan.lambda.expect("validated");
    let (primary, extra): (GeneratorMatrix, Option<GeneratorMatrix>) = match &plan.construction {
        Construction::Standard => (
            build_independent_bivariate_generator(lambda),
            Some(build_standard_generator(lambda)),
        ),
        Construction::ExpAlt(params) => (build_exp_alt_generator(lambda, params)?, None),
        Construction::MapAlt { map, .. } => (
            altbm_core::map_alt::build_map_alt_generator(lambda, map)?,
            None,
        ),
    };

    if plan.formats.csv {
        let mut table = CsvTable::new(&[
            "row",
            "col",
            "row_state",
            "col_state",
            "rate",
            "seed",
            "params",
        ]);
        for i in 0..primary.dim() {
            for j in 0..primary.dim() {
                let [seed, params] = meta_cells(plan);
                table.push(vec![
                    Cell::Int(i as u64),
                    Cell::Int(j as u64),
                    Cell::Text(primary.labels()[i].clone()),
                    Cell::Text(primary.labels()[j].clone()),
                    Cell::Float(primary.matrix().get(i, j)),
                    seed,
                    params,
                ])?;
            }
        }
        sink.write_csv("generator.csv", &table)?;
    }
    if plan.formats.json {
        #[derive(Serialize)]
        struct Payload {
            construction: String,
            lambda: f64,
            generator: GeneratorJson,
            #[serde(skip_serializing_if = "Option::is_none")]
            marginal: Option<GeneratorJson>,
        }
        sink.write_json(
            "generator.json",
            &Payload {
                construction: plan.construction.name().to_string(),
                lambda,
                generator: generator_json(&primary),
                marginal: extra.as_ref().map(generator_json),
            },
        )?;
    }
    Ok(())
}

// --- correlation -------------------------------------------------------------

fn correlation(plan: &Plan, sink: &mut OutputSink) -> Result<(), CliError> {
    let stream = RandomStream::new(plan.seed);
    let mut rows = Vec::new();
    for (ti, &t) in plan.t_grid.iter().enumerate() {
        let (analytic, driver) = match &plan.construction {
            Construction::ExpAlt(params) => (corr_exp(params, t), Driver::Exp(*params)),
            Construction::MapAlt { map, .. } => (
                corr_map_with(map, t, plan.laplace_terms, plan.laplace_tolerance)?,
                Driver::Map(map.clone()),
            ),
            Construction::Standard => unreachable!("validated"),
        };
        let estimate = mc_correlation(
            &driver,
            t,
            plan.replications,
            &stream.substream_indexed("t", ti as u64),
        );
        rows.push((t, analytic, estimate));
    }

    if plan.formats.csv {
        let mut table = CsvTable::new(&[
            "t",
            "analytic",
            "mc_estimate",
            "mc_stderr",
            "replications",
            "seed",
            "params",
        ]);
        for (t, analytic, estimate) in &rows {
            let [seed, params] = meta_cells(plan);
            table.push(vec![
                Cell::Float(*t),
                Cell::Float(*analytic),
                Cell::Float(estimate.mean),
                Cell::Float(estimate.stderr),
                Cell::Int(estimate.replications),
                seed,
                params,
            ])?;
        }
        sink.write_csv("correlation.csv", &table)?;
    }
    if plan.formats.json {
        #[derive(Serialize)]
        struct Row {
            t: f64,
            analytic: f64,
            mc_estimate: f64,
            mc_stderr: f64,
            replications: u64,
        }
        let payload: Vec<Row> = rows
            .iter()
            .map(|(t, analytic, e)| Row {
                t: *t,
                analytic: *analytic,
                mc_estimate: e.mean,
                mc_stderr: e.stderr,
                replications: e.replications,
            })
            .collect();
        sink.write_json("correlation.json", &payload)?;
    }
    if plan.formats.svg {
        let chart = Chart {
            title: format!("correlation, {}", plan.params_summary()),
            x_label: "t".into(),
            y_label: "corr".into(),
            log_x: false,
            log_y: false,
            series: vec![
                Series {
                    name: "analytic".into(),
                    points: rows.iter().map(|(t, a, _)| (*t, *a)).collect(),
                    color: PALETTE[0],
                    draw_markers: false,
                },
                Series {
                    name: "monte carlo".into(),
                    points: rows.iter().map(|(t, _, e)| (*t, e.mean)).collect(),
                    color: PALETTE[1],
                    draw_markers: true,
                },
            ],
        };
        sink.write_text("correlation.svg", &chart.render())?;
    }
    Ok(())
}

// --- laplace -----------------------------------------------------------------

fn laplace(plan: &Plan, sink: &mut OutputSink) -> Result<(), CliError> {
    let mut rows = Vec::new();
    for &q in &plan.q_grid {
        let value = match &plan.construction {
            Construction::ExpAlt(params) => cov_laplace_exp(params, q),
            Construction::MapAlt { map, .. } => cov_laplace(map, q)?,
            Construction::Standard => unreachable!("validated"),
        };
        rows.push((q, value));
    }
    if plan.formats.csv {
        let mut table = CsvTable::new(&["q", "value", "seed", "params"]);
        for (q, value) in &rows {
            let [seed, params] = meta_cells(plan);
            table.push(vec![Cell::Float(*q), Cell::Float(*value), seed, params])?;
        }
        sink.write_csv("laplace.csv", &table)?;
    }
    if plan.formats.json {
        #[derive(Serialize)]
        struct Row {
            q: f64,
            value: f64,
        }
        let payload: Vec<Row> = rows.iter().map(|&(q, value)| Row { q, value }).collect();
        sink.write_json("laplace.json", &payload)?;
    }
    if plan.formats.svg {
        let chart = Chart {
            title: format!("covariance transform, {}", plan.params_summary()),
            x_label: "q".into(),
            y_label: "transform".into(),
            log_x: true,
            log_y: false,
            series: vec![Series {
                name: "transform".into(),
                points: rows.clone(),
                color: PALETTE[0],
                draw_markers: true,
            }],
        };
        sink.write_text("laplace.svg", &chart.render())?;
    }
    Ok(())
}

// --- converge ----------------------------------------------------------------

fn converge(plan: &Plan, sink: &mut OutputSink) -> Result<(), CliError> {
    let stream = RandomStream::new(plan.seed);
    let construction = match &plan.construction {
        Construction::Standard => SweepConstruction::Standard,
        Construction::ExpAlt(params) => SweepConstruction::ExpAlt(*params),
        Construction::MapAlt { map, gamma } => SweepConstruction::MapAlt {
            map: map.clone(),
            gamma: *gamma,
        },
    };
    let lambdas = plan.lambdas.clone().expect("validated");
    let horizon = plan.horizon.expect("validated");
    let table: SweepTable =
        convergence_sweep(&construction, &lambdas, horizon, plan.replications, &stream)?;

    if plan.formats.csv {
        let mut csv = CsvTable::new(&[
            "lambda",
            "median_misalignment",
            "p90_misalignment",
            "max_value_residual",
            "max_minimum_residual",
            "max_alternation_residual",
            "slope",
            "slope_stderr",
            "slope_ci_low",
            "slope_ci_high",
            "seed",
            "params",
        ]);
        for row in &table.rows {
            let [seed, params] = meta_cells(plan);
            csv.push(vec![
                Cell::Float(row.lambda),
                Cell::Float(row.median_misalignment),
                Cell::Float(row.p90_misalignment),
                Cell::Float(row.max_value_residual),
                Cell::Float(row.max_minimum_residual),
                Cell::Float(row.max_alternation_residual),
                Cell::Float(table.slope),
                Cell::Float(table.slope_stderr),
                Cell::Float(table.slope_ci.0),
                Cell::Float(table.slope_ci.1),
                seed,
                params,
            ])?;
        }
        sink.write_csv("converge.csv", &csv)?;
    }
    if plan.formats.json {
        #[derive(Serialize)]
        struct Row {
            lambda: f64,
            median_misalignment: f64,
            p90_misalignment: f64,
            max_value_residual: f64,
            max_minimum_residual: f64,
            max_alternation_residual: f64,
        }
        #[derive(Serialize)]
        struct Payload {
            rows: Vec<Row>,
            slope: f64,
            slope_stderr: f64,
            slope_ci: (f64, f64),
        }
        sink.write_json(
            "converge.json",
            &Payload {
                rows: table
                    .rows
                    .iter()
                    .map(|r| Row {
                        lambda: r.lambda,
                        median_misalignment: r.median_misalignment,
                        p90_misalignment: r.p90_misalignment,
                        max_value_residual: r.max_value_residual,
                        max_minimum_residual: r.max_minimum_residual,
                        max_alternation_residual: r.max_alternation_residual,
                    })
                    .collect(),
                slope: table.slope,
                slope_stderr: table.slope_stderr,
                slope_ci: table.slope_ci,
            },
        )?;
    }
    if plan.formats.svg {
        let chart = Chart {
            title: format!("epoch misalignment vs rate, {}", plan.params_summary()),
            x_label: "lambda (log)".into(),
            y_label: "median misalignment (log)".into(),
            log_x: true,
            log_y: true,
            series: vec![Series {
                name: format!("slope {:.3}", table.slope),
                points: table
                    .rows
                    .iter()
                    .map(|r| (r.lambda, r.median_misalignment))
                    .collect(),
                color: PALETTE[0],
                draw_markers: true,
            }],
        };
        sink.write_text("converge.svg", &chart.render())?;
    }
    Ok(())
}
