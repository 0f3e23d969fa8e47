//! The four subcommands.

use std::fmt;

use retarded_bounds::bounds::{self, compute_tau, remark_tau, BoundsError, KERNEL_TOL};
use retarded_bounds::oracle::{check_dominance_until, generate_random_instance, solve_equality_resolved, Family};
use retarded_bounds::par::map_indexed;
use retarded_bounds::problem::validate;
use retarded_bounds::{BoundCurve, Execution, Grid, ProblemInstance, TauSearch, TheoremForm, TransformTables};

use crate::config::{InstanceSource, Settings};
use crate::presets::Corollary;
use crate::table::{emit, sig9, Row, HEADER};

/// A run that ended with a nonzero exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_DOMINANCE: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

impl Failure {
    pub fn config(e: impl fmt::Display) -> Failure {
        Failure {
            code: EXIT_VALIDATION,
            message: format!("{e:#}"),
        }
    }

    fn numerical(e: impl fmt::Display) -> Failure {
        Failure {
            code: EXIT_NUMERICAL,
            message: format!("numerical failure: {e}"),
        }
    }

    fn bounds(e: BoundsError) -> Failure {
        match e {
            BoundsError::Inadmissible(_) | BoundsError::X1OutsideImage { .. } => Failure {
                code: EXIT_VALIDATION,
                message: e.to_string(),
            },
            e => Failure::numerical(e),
        }
    }
}

type Outcome = Result<(), Failure>;

struct Loaded {
    label: String,
    inst: ProblemInstance,
    corollary: Option<Corollary>,
}

fn load(s: &Settings) -> Result<Loaded, Failure> {
    let Some(src) = &s.instance else {
        return Err(Failure::config(
            "no instance: give --preset, a problem in --config, or --seed",
        ));
    };
    let (label, mut inst, corollary) = match src {
        InstanceSource::Preset(p) => {
            let b = p.build(s.t_max).map_err(Failure::config)?;
            (format!("preset {}", p.name()), b.instance, b.corollary)
        }
        InstanceSource::Problem(src) => {
            let inst = src.build().map_err(Failure::config)?;
            ("problem from config".to_string(), inst, None)
        }
        InstanceSource::Generated { seed, family } => (
            format!("seed {seed} ({})", family.name()),
            generate_random_instance(*seed, *family),
            None,
        ),
    };
    if let Some(t) = s.t_max {
        inst.t_max = t;
    }
    let report = validate(&inst, s.samples);
    if !report.pass {
        return Err(Failure {
            code: EXIT_VALIDATION,
            message: report.to_string(),
        });
    }
    if !report.warnings.is_empty() {
        eprint!("{report}");
    }
    Ok(Loaded { label, inst, corollary })
}

fn form_name(f: TheoremForm) -> &'static str {
    match f {
        TheoremForm::One => "one",
        TheoremForm::Two => "two",
    }
}

fn output_grid(inst: &ProblemInstance, s: &Settings) -> Grid {
    Grid::uniform(inst.t_max, s.grid).expect("validated grid size and horizon")
}

fn curve_for(inst: &ProblemInstance, grid: &Grid, exec: Execution) -> Result<(TransformTables, BoundCurve), Failure> {
    let tables = TransformTables::build(inst).map_err(Failure::bounds)?;
    let search = TauSearch::for_instance(inst);
    let curve = bounds::bound_curve(inst, &tables, inst.form, grid, &search, exec).map_err(Failure::bounds)?;
    Ok((tables, curve))
}

fn tau_line(curve: &BoundCurve) -> String {
    if curve.tau_capped {
        format!("tau: {} (capped at t_max)", sig9(curve.tau))
    } else {
        format!("tau: {}", sig9(curve.tau))
    }
}

/// Nodes up to `τ` that should carry a bound but do not.
fn missing_nodes(curve: &BoundCurve) -> Vec<f64> {
    curve
        .grid
        .nodes()
        .iter()
        .zip(&curve.values)
        .filter(|(t, v)| **t <= curve.tau && v.is_none())
        .map(|(t, _)| *t)
        .collect()
}

fn write_rows(s: &Settings, rows: &[Row]) -> Outcome {
    let lines: Vec<String> = rows.iter().map(Row::line).collect();
    emit(s.out.as_deref(), HEADER, &lines).map_err(|e| Failure::config(format!("writing output: {e}")))
}

pub fn bound(s: &Settings) -> Outcome {
    let l = load(s)?;
    let grid = output_grid(&l.inst, s);
    let (tables, curve) = curve_for(&l.inst, &grid, Execution::default())?;
    let missing = missing_nodes(&curve);
    let rows: Vec<Row> = grid
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, &t)| Row {
            t,
            bound: curve.values[i],
            oracle: None,
            margin: None,
            in_domain: curve.in_domain(i),
        })
        .collect();
    write_rows(s, &rows)?;
    eprintln!("instance: {}", l.label);
    eprintln!("form: {}", form_name(l.inst.form));
    eprintln!("{}", tau_line(&curve));
    eprintln!("M: {}", sig9(tables.sup()));
    eprintln!("tolerances: kernel quadrature {KERNEL_TOL:e}, tau search 1e-10, domain margin 1e-6");
    if let Some(c) = &l.corollary {
        let t = l.inst.t_max.min(curve.tau);
        match c.bound(t) {
            Ok(v) => eprintln!("closed-form bound at t = {}: {}", sig9(t), sig9(v)),
            Err(e) => eprintln!("closed-form bound at t = {}: unavailable ({e})", sig9(t)),
        }
    }
    if let Some(t) = missing.first() {
        return Err(Failure::numerical(format!(
            "bound could not be evaluated at {} node(s) inside the horizon, first t = {}",
            missing.len(),
            sig9(*t)
        )));
    }
    Ok(())
}

/// Dominance outcome of one instance.
struct Verdict {
    tau: f64,
    tau_capped: bool,
    pass: bool,
    compared: usize,
    max_violation: f64,
    worst_t: Option<f64>,
    /// Smallest `(bound - u) / bound` over the compared nodes.
    min_rel_margin: Option<f64>,
    rows: Vec<Row>,
}

fn verdict(inst: &ProblemInstance, s: &Settings, exec: Execution) -> Result<Verdict, Failure> {
    let grid = output_grid(inst, s);
    let (_, curve) = curve_for(inst, &grid, exec)?;
    let curve = if s.scale_bound == 1.0 {
        curve
    } else {
        curve.scaled(s.scale_bound)
    };
    let sol = solve_equality_resolved(inst, &grid, s.oracle_spacing, s.oracle_iterations, s.oracle_tol);
    let limit = if curve.tau_capped {
        f64::INFINITY
    } else {
        s.tau_fraction * curve.tau
    };
    let report = check_dominance_until(&sol, &curve, s.rel_tol, s.abs_tol, limit).map_err(Failure::numerical)?;
    let nodes = grid.nodes();
    let min_rel_margin = report
        .margin
        .iter()
        .zip(&curve.values)
        .filter_map(|(m, b)| Some(m.as_ref()? / b.as_ref()?))
        .reduce(f64::min);
    let rows = nodes
        .iter()
        .enumerate()
        .map(|(i, &t)| Row {
            t,
            bound: curve.values[i],
            oracle: Some(sol.u[i]).filter(|u| u.is_finite()),
            margin: report.margin[i],
            in_domain: curve.in_domain(i),
        })
        .collect();
    Ok(Verdict {
        tau: curve.tau,
        tau_capped: curve.tau_capped,
        pass: report.pass,
        compared: report.compared,
        max_violation: report.max_violation,
        worst_t: report.worst_node.map(|i| nodes[i]),
        min_rel_margin,
        rows,
    })
}

pub fn verify(s: &Settings) -> Outcome {
    let l = load(s)?;
    let v = verdict(&l.inst, s, Execution::default())?;
    write_rows(s, &v.rows)?;
    eprintln!("instance: {}", l.label);
    eprintln!("form: {}", form_name(l.inst.form));
    eprintln!(
        "tau: {}{}",
        sig9(v.tau),
        if v.tau_capped { " (capped at t_max)" } else { "" }
    );
    eprintln!("dominance: {}", if v.pass { "pass" } else { "FAIL" });
    eprintln!("compared nodes: {}", v.compared);
    eprintln!("max_violation: {}", sig9(v.max_violation));
    if let Some(t) = v.worst_t {
        eprintln!("worst node: t = {}", sig9(t));
    }
    eprintln!("slack: relative {:e}, absolute {:e}", s.rel_tol, s.abs_tol);
    if s.scale_bound != 1.0 {
        eprintln!("bound scaled by {}", s.scale_bound);
    }
    if v.pass {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_DOMINANCE,
            message: "dominance violated".into(),
        })
    }
}

pub fn tau(s: &Settings) -> Outcome {
    let l = load(s)?;
    let tables = TransformTables::build(&l.inst).map_err(Failure::bounds)?;
    let search = TauSearch::for_instance(&l.inst);
    let probe = tables.psi_image();
    println!("instance: {}", l.label);
    if !probe.bounded {
        println!("Psi unbounded; tau = t_max");
        println!("tau = {}", sig9(l.inst.t_max));
        println!("M = inf");
        return Ok(());
    }
    let tau = compute_tau(&l.inst, &tables, &search).map_err(Failure::bounds)?;
    println!("Psi bounded; M = {}", sig9(probe.sup));
    if tau.capped {
        println!("domain condition holds up to t_max");
    }
    println!("tau = {}", sig9(tau.tau));
    match remark_tau(&l.inst, &tables, &search) {
        Ok(r) => println!("tau with fixed delta = {}", sig9(r.tau)),
        Err(e) => println!("tau with fixed delta: unavailable ({e})"),
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Pass,
    Invalid,
    Numerical,
    Dominance,
}

impl Status {
    fn name(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Invalid => "invalid",
            Status::Numerical => "numerical",
            Status::Dominance => "dominance",
        }
    }
}

struct SeedRow {
    seed: u64,
    family: Family,
    form: TheoremForm,
    status: Status,
    verdict: Option<Verdict>,
    note: String,
}

const BATCH_HEADER: &str = "seed,family,form,status,tau,tau_capped,compared,max_violation,min_rel_margin";

impl SeedRow {
    fn line(&self) -> String {
        let head = format!(
            "{},{},{},{}",
            self.seed,
            self.family.name(),
            form_name(self.form),
            self.status.name()
        );
        match &self.verdict {
            Some(v) => format!(
                "{head},{},{},{},{},{}",
                sig9(v.tau),
                v.tau_capped,
                v.compared,
                sig9(v.max_violation),
                v.min_rel_margin.map(sig9).unwrap_or_default()
            ),
            None => format!("{head},,,,,"),
        }
    }
}

fn run_seed(seed: u64, s: &Settings) -> SeedRow {
    let family = s.family.unwrap_or_else(|| Family::for_seed(seed));
    let inst = generate_random_instance(seed, family);
    let mut row = SeedRow {
        seed,
        family,
        form: inst.form,
        status: Status::Pass,
        verdict: None,
        note: String::new(),
    };
    let report = validate(&inst, s.samples);
    if !report.pass {
        row.status = Status::Invalid;
        row.note = report.to_string();
        return row;
    }
    match verdict(&inst, s, Execution::Sequential) {
        Ok(v) => {
            if !v.pass {
                row.status = Status::Dominance;
            }
            row.verdict = Some(v);
        }
        Err(f) => {
            row.status = if f.code == EXIT_VALIDATION {
                Status::Invalid
            } else {
                Status::Numerical
            };
            row.note = f.message;
        }
    }
    row
}

pub fn batch(s: &Settings) -> Outcome {
    let n = s.seeds as usize;
    let rows = map_indexed(n, Execution::default(), |i| run_seed(s.seed + i as u64, s));
    let lines: Vec<String> = rows.iter().map(SeedRow::line).collect();
    emit(s.out.as_deref(), BATCH_HEADER, &lines).map_err(|e| Failure::config(format!("writing output: {e}")))?;
    for r in rows.iter().filter(|r| !r.note.is_empty()) {
        eprintln!("seed {} {}: {}", r.seed, r.status.name(), r.note.trim_end());
    }
    let failed = |st: Status| -> Vec<u64> { rows.iter().filter(|r| r.status == st).map(|r| r.seed).collect() };
    let passed = rows.iter().filter(|r| r.status == Status::Pass).count();
    eprintln!("batch: {passed}/{n} seeds pass");
    for (st, code) in [
        (Status::Dominance, EXIT_DOMINANCE),
        (Status::Numerical, EXIT_NUMERICAL),
        (Status::Invalid, EXIT_VALIDATION),
    ] {
        let seeds = failed(st);
        if !seeds.is_empty() {
            let list: Vec<String> = seeds.iter().map(u64::to_string).collect();
            return Err(Failure {
                code,
                message: format!("{} failure at seeds {}", st.name(), list.join(" ")),
            });
        }
    }
    Ok(())
}
