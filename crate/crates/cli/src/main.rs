use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use serde::Serialize;
use serde_json::{json, Value};

use tbwp::analysis::{
    check_circuit_tbwp, check_nonpassive_zero_multiplicity, check_ode_tbwp, Condition, Outcome,
    TbwpReport, Verdict,
};
use tbwp::dae::{assemble_dae, pencil_spectrum};
use tbwp::field::parse_field;
use tbwp::graph::{check_configurations, enumerate_trees, FamilyKind, OperatingPoint};
use tbwp::netlist::parse_netlist;
use tbwp::numerics::Tolerances;
use tbwp::sim::{circuit_exchange_experiment, trace_equilibrium_line, ExchangeParams};
use tbwp::{Circuit, CircuitDae};

/// Exit status for usage, I/O and analysis errors.
const ERROR_EXIT: u8 = 3;

#[derive(Parser)]
#[command(
    name = "tbwp",
    version,
    about = "Certify transcritical bifurcations without parameters in memristive circuits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the circuit and non-passive hypotheses at one memristor charge.
    Analyze {
        netlist: PathBuf,
        #[arg(long, value_name = "q=<real>", default_value = "q=0", value_parser = parse_charge)]
        at: f64,
        /// Write the full analysis bundle as JSON (`-` for standard output).
        #[arg(long, value_name = "PATH")]
        json: Option<PathBuf>,
        #[command(flatten)]
        tol: TolArgs,
    },
    /// List the spanning trees of a family with their cotree MR-products.
    Trees {
        netlist: PathBuf,
        #[arg(long, default_value = "all", value_parser = parse_family)]
        family: FamilyKind,
        #[arg(long, value_name = "q=<real>", default_value = "q=0", value_parser = parse_charge)]
        at: f64,
        #[arg(long, value_name = "PATH")]
        json: Option<PathBuf>,
    },
    /// Print the spectrum of the reduced linearization at one charge.
    Pencil {
        netlist: PathBuf,
        #[arg(long, value_name = "q=<real>", default_value = "q=0", value_parser = parse_charge)]
        at: f64,
        #[arg(long, value_name = "PATH")]
        json: Option<PathBuf>,
        #[command(flatten)]
        tol: TolArgs,
    },
    /// Integrate perturbations on both sides of the bifurcation charge.
    Simulate {
        netlist: PathBuf,
        #[arg(long, value_name = "q=<real>", default_value = "q=0", value_parser = parse_charge)]
        at: f64,
        /// Charge range `lo:hi` for the line trace [default: q*-1:q*+1].
        #[arg(long, value_name = "LO:HI", value_parser = parse_range)]
        range: Option<(f64, f64)>,
        /// Offset of each side from q* [default: 10% of the range].
        #[arg(long)]
        dq: Option<f64>,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        #[arg(long, default_value_t = 50.0)]
        tmax: f64,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        #[arg(long, default_value_t = 21)]
        samples: usize,
        #[arg(long, default_value = "sim-out")]
        out: PathBuf,
        /// Run even when the numeric check does not certify the point.
        #[arg(long)]
        force: bool,
        #[command(flatten)]
        tol: TolArgs,
    },
    /// Check a polynomial vector field at an equilibrium.
    CheckOde {
        field: PathBuf,
        /// Equilibrium as comma-separated coordinates [default: from the file, else the origin].
        #[arg(long, value_name = "X1,X2,...", value_parser = parse_vector)]
        at: Option<Coords>,
        /// Direction of the equilibrium line [default: from the file, else the first axis].
        #[arg(long, value_name = "D1,D2,...", value_parser = parse_vector)]
        line: Option<Coords>,
        #[arg(long, value_name = "PATH")]
        json: Option<PathBuf>,
        #[command(flatten)]
        tol: TolArgs,
    },
}

#[derive(Args)]
struct TolArgs {
    /// Tolerance override `key=value`; may be repeated.
    #[arg(long = "tol", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// File of `key = value` tolerance lines, applied before `--tol`.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
}

impl TolArgs {
    fn resolve(&self) -> Result<Tolerances> {
        let mut tol = Tolerances::default();
        if let Some(path) = &self.config {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            tol.apply_config(&text)
                .with_context(|| format!("in {}", path.display()))?;
        }
        for item in &self.overrides {
            let (k, v) = item
                .split_once('=')
                .with_context(|| format!("`--tol {item}`: expected key=value"))?;
            tol.set(k, v)?;
        }
        Ok(tol)
    }
}

fn parse_charge(s: &str) -> Result<f64, String> {
    let v = s.strip_prefix("q=").unwrap_or(s);
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| format!("expected q=<real>, got `{s}`"))
}

fn parse_family(s: &str) -> Result<FamilyKind, String> {
    s.parse()
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or("expected lo:hi")?;
    let lo = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let hi = b.trim().parse::<f64>().map_err(|e| e.to_string())?;
    if !(lo < hi) {
        return Err("expected lo < hi".into());
    }
    Ok((lo, hi))
}

#[derive(Clone)]
struct Coords(Vec<f64>);

fn parse_vector(s: &str) -> Result<Coords, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<Result<_, _>>()
        .map(Coords)
}

fn load_circuit(path: &Path) -> Result<Circuit> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_netlist(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    if path == Path::new("-") {
        print!("{text}");
    } else {
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn quiet(json: &Option<PathBuf>) -> bool {
    json.as_deref() == Some(Path::new("-"))
}

fn print_conditions(conditions: &[Condition]) {
    let width = conditions.iter().map(|c| c.id.len()).max().unwrap_or(0);
    for c in conditions {
        let tag = match c.outcome {
            Outcome::Pass => "pass",
            Outcome::Fail => "FAIL",
            Outcome::Inconclusive => "????",
        };
        println!("  [{tag}] {:width$}  {}", c.id, c.detail);
    }
}

#[derive(Serialize)]
struct BranchSummary<'a> {
    id: &'a str,
    kind: tbwp::netlist::DeviceKind,
    from: &'a str,
    to: &'a str,
}

fn circuit_summary(circuit: &Circuit) -> Value {
    let nodes = circuit.nodes();
    let branches: Vec<BranchSummary> = circuit
        .branches()
        .iter()
        .map(|b| BranchSummary {
            id: &b.id,
            kind: b.kind,
            from: &nodes[b.tail],
            to: &nodes[b.head],
        })
        .collect();
    json!({
        "nodes": nodes,
        "branches": branches,
        "memristor": circuit.memristor().map(|b| b.id.as_str()),
    })
}

fn tree_summary(circuit: &Circuit, kind: FamilyKind, point: &OperatingPoint<f64>) -> Value {
    let mut family = enumerate_trees(circuit, kind);
    let sum = family.evaluate(circuit, point);
    json!({ "family": kind, "count": family.len(), "sum": sum })
}

fn analyze(
    netlist: &Path,
    q: f64,
    json_path: &Option<PathBuf>,
    tol: &Tolerances,
) -> Result<Verdict> {
    let circuit = load_circuit(netlist)?;
    let dae = assemble_dae(&circuit)?;
    let eq = dae
        .equilibrium_at(q, None, tol)
        .with_context(|| format!("no equilibrium with q = {q}"))?;
    let report = check_circuit_tbwp(&dae, &eq, tol)?;
    let nonpassive = check_nonpassive_zero_multiplicity(&dae, &eq, tol);
    let layout = dae.layout();
    let point = OperatingPoint {
        charges: eq
            .y
            .rows(layout.q_m().start, layout.q_m().len())
            .iter()
            .copied()
            .collect(),
        resistor_currents: eq
            .z
            .rows(layout.i_r().start, layout.i_r().len())
            .iter()
            .copied()
            .collect(),
    };
    let verdict = report.verdict();

    if !quiet(json_path) {
        let m = circuit.memristor().map(|b| b.id.as_str()).unwrap_or("-");
        println!(
            "circuit: {} nodes, {} branches, memristor {m}, q = {q}",
            circuit.node_count(),
            circuit.branch_count()
        );
        println!(
            "verdict: {} (structural {}, numeric {})",
            verdict.name(),
            report.structural_verdict.name(),
            report.numeric_verdict.name()
        );
        print_conditions(&report.report.conditions);
        match &nonpassive {
            Ok(np) => {
                println!("nonpassive report: {}", np.verdict().name());
                println!(
                    "  proper trees: {}, sum {:e}; L-proper trees: {}, sum {:e}; zero cluster {}",
                    np.proper.count,
                    np.proper.sum,
                    np.l_proper.count,
                    np.l_proper.sum,
                    np.zero_cluster
                        .map_or("unavailable".to_string(), |n| n.to_string())
                );
                print_conditions(&np.report.conditions);
            }
            Err(e) => println!("nonpassive report unavailable: {e}"),
        }
    }

    if let Some(path) = json_path {
        let bundle = json!({
            "schema": tbwp::analysis::SCHEMA_VERSION,
            "input": netlist.display().to_string(),
            "charge": q,
            "circuit": circuit_summary(&circuit),
            "config": check_configurations(&circuit),
            "trees": [
                tree_summary(&circuit, FamilyKind::Proper, &point),
                tree_summary(&circuit, FamilyKind::LProper, &point),
            ],
            "report": report,
            "nonpassive": match &nonpassive {
                Ok(np) => serde_json::to_value(np)?,
                Err(e) => json!({ "error": e.to_string() }),
            },
            "artifacts": if quiet(json_path) { vec![] } else { vec![path.display().to_string()] },
        });
        write_json(path, &bundle)?;
    }
    Ok(verdict)
}

fn explain_empty(kind: FamilyKind) -> &'static str {
    match kind {
        FamilyKind::All => "the circuit graph has no spanning tree",
        FamilyKind::Proper => {
            "no spanning tree contains every voltage source and capacitor while avoiding current sources and inductors"
        }
        FamilyKind::LProper => {
            "no spanning tree contains every voltage source and inductor while avoiding current sources and capacitors"
        }
    }
}

fn trees(netlist: &Path, kind: FamilyKind, q: f64, json_path: &Option<PathBuf>) -> Result<()> {
    let circuit = load_circuit(netlist)?;
    let mut family = enumerate_trees(&circuit, kind);
    let sum = family.evaluate(&circuit, &OperatingPoint::at_charge(&circuit, q));
    let records = family.records(&circuit);
    if !quiet(json_path) {
        println!("family {}: {} trees", kind.name(), family.len());
        if family.is_empty() {
            println!("  {}", explain_empty(kind));
        }
        for r in &records {
            println!(
                "  {{{}}}  product {}",
                r.branches.join(", "),
                r.cotree_product
            );
        }
        println!("sum at q = {q}: {sum}");
    }
    if let Some(path) = json_path {
        let value = json!({
            "schema": tbwp::analysis::SCHEMA_VERSION,
            "family": kind,
            "charge": q,
            "count": family.len(),
            "trees": records,
            "sum": sum,
        });
        write_json(path, &value)?;
    }
    Ok(())
}

fn pencil(netlist: &Path, q: f64, json_path: &Option<PathBuf>, tol: &Tolerances) -> Result<()> {
    let circuit = load_circuit(netlist)?;
    let dae = assemble_dae(&circuit)?;
    let eq = dae
        .equilibrium_at(q, None, tol)
        .with_context(|| format!("no equilibrium with q = {q}"))?;
    let ps = pencil_spectrum(&dae, &eq, tol)?;
    if !quiet(json_path) {
        println!("q = {q}: {} eigenvalues", ps.spectrum.eigenvalues.len());
        for (k, l) in ps.spectrum.eigenvalues.iter().enumerate() {
            let class = if ps.spectrum.zero_cluster.contains(&k) {
                "zero"
            } else if ps.spectrum.critical.contains(&k) {
                "critical"
            } else if ps.spectrum.stable.contains(&k) {
                "stable"
            } else {
                "unstable"
            };
            println!("  {:>+.12e} {:>+.12e}i  {class}", l.re, l.im);
        }
        println!(
            "zero cluster size {}, corank F' {}, corank g_z {}",
            ps.spectrum.zero_cluster.len(),
            ps.full_corank,
            ps.gz_corank
        );
    }
    if let Some(path) = json_path {
        let value = json!({
            "schema": tbwp::analysis::SCHEMA_VERSION,
            "charge": q,
            "y": eq.y.as_slice(),
            "z": eq.z.as_slice(),
            "pencil": ps,
        });
        write_json(path, &value)?;
    }
    Ok(())
}

fn file_label(label: &str) -> String {
    label
        .to_lowercase()
        .replace(">0", "_positive")
        .replace("<0", "_negative")
        .replace("<q*", "_below")
        .replace(">q*", "_above")
        .replace("=0", "_zero")
}

struct SimOptions {
    q: f64,
    range: Option<(f64, f64)>,
    dq: Option<f64>,
    eps: f64,
    tmax: f64,
    step: f64,
    samples: usize,
    out: PathBuf,
    force: bool,
}

fn simulate(netlist: &Path, o: &SimOptions, tol: &Tolerances) -> Result<()> {
    let circuit = load_circuit(netlist)?;
    let dae: CircuitDae = assemble_dae(&circuit)?;
    let eq = dae
        .equilibrium_at(o.q, None, tol)
        .with_context(|| format!("no equilibrium with q = {}", o.q))?;
    let check = check_circuit_tbwp(&dae, &eq, tol)?;
    if check.numeric_verdict != Verdict::Certified && !o.force {
        bail!(
            "the numeric check does not certify q = {} ({}); rerun with --force to simulate anyway",
            o.q,
            check.numeric_verdict.name()
        );
    }
    let (lo, hi) = o.range.unwrap_or((o.q - 1.0, o.q + 1.0));
    let params = ExchangeParams {
        dq: o.dq.unwrap_or(0.1 * (hi - lo)),
        eps: o.eps,
        t_end: o.tmax,
        step: o.step,
    };
    let run = circuit_exchange_experiment(&dae, o.q, &params, tol)?;
    let trace = trace_equilibrium_line(&dae, lo, hi, o.samples, tol)?;

    fs::create_dir_all(&o.out).with_context(|| format!("creating {}", o.out.display()))?;
    let mut artifacts = Vec::new();
    for t in &run.trajectories {
        let path = o
            .out
            .join(format!("trajectory_{}.csv", file_label(&t.label)));
        fs::write(&path, t.to_csv()).with_context(|| format!("writing {}", path.display()))?;
        artifacts.push(path.display().to_string());
    }
    let line_path = o.out.join("line.csv");
    fs::write(&line_path, trace.to_csv())
        .with_context(|| format!("writing {}", line_path.display()))?;
    artifacts.push(line_path.display().to_string());
    let report_path = o.out.join("exchange.json");
    artifacts.push(report_path.display().to_string());
    let value = json!({
        "schema": tbwp::analysis::SCHEMA_VERSION,
        "exchange": run.report,
        "artifacts": artifacts,
    });
    write_json(&report_path, &value)?;

    for s in &run.report.sides {
        println!(
            "{:>4} side (q = {}): {:?}, final distance {:.3e}, max distance {:.3e}{}",
            s.label,
            s.charge,
            s.verdict,
            s.final_distance,
            s.max_distance,
            s.blow_up
                .map_or(String::new(), |t| format!(", diverged at t = {t}"))
        );
    }
    println!("wrote {}", artifacts.join(", "));
    Ok(())
}

fn check_ode(
    path: &Path,
    at: &Option<Coords>,
    line: &Option<Coords>,
    json_path: &Option<PathBuf>,
    tol: &Tolerances,
) -> Result<Verdict> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let field = parse_field(&text).with_context(|| format!("parsing {}", path.display()))?;
    let n = field.vars().len();
    let point = at
        .as_ref()
        .map(|c| c.0.clone())
        .or_else(|| field.point.clone())
        .unwrap_or_else(|| vec![0.0; n]);
    let direction = line
        .as_ref()
        .map(|c| c.0.clone())
        .or_else(|| field.line_direction.clone())
        .unwrap_or_else(|| {
            let mut d = vec![0.0; n];
            d[0] = 1.0;
            d
        });
    if point.len() != n || direction.len() != n {
        bail!("the field has {n} variables; --at and --line need {n} coordinates");
    }
    let report: TbwpReport = check_ode_tbwp(
        &field,
        &DVector::from_vec(point.clone()),
        &DVector::from_vec(direction),
        tol,
    )?;
    if !quiet(json_path) {
        println!(
            "field in ({}) at ({}): {}",
            field.vars().join(", "),
            point
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(", "),
            report.verdict.name()
        );
        print_conditions(&report.conditions);
    }
    if let Some(p) = json_path {
        write_json(p, &report)?;
    }
    Ok(report.verdict)
}

fn run(cli: Cli) -> Result<u8> {
    let code = |v: Verdict| v.exit_code() as u8;
    match cli.command {
        Command::Analyze {
            netlist,
            at,
            json,
            tol,
        } => Ok(code(analyze(&netlist, at, &json, &tol.resolve()?)?)),
        Command::Trees {
            netlist,
            family,
            at,
            json,
        } => trees(&netlist, family, at, &json).map(|_| 0),
        Command::Pencil {
            netlist,
            at,
            json,
            tol,
        } => pencil(&netlist, at, &json, &tol.resolve()?).map(|_| 0),
        Command::Simulate {
            netlist,
            at,
            range,
            dq,
            eps,
            tmax,
            step,
            samples,
            out,
            force,
            tol,
        } => {
            let options = SimOptions {
                q: at,
                range,
                dq,
                eps,
                tmax,
                step,
                samples,
                out,
                force,
            };
            simulate(&netlist, &options, &tol.resolve()?).map(|_| 0)
        }
        Command::CheckOde {
            field,
            at,
            line,
            json,
            tol,
        } => Ok(code(check_ode(&field, &at, &line, &json, &tol.resolve()?)?)),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { ERROR_EXIT } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(ERROR_EXIT)
        }
    }
}
