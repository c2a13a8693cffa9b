//! `spencer-lab`: exact symbol analysis for linear PDE systems.
//!
//! Subcommands cover tableau prolongation and Spencer cohomology,
//! relative-connection towers with curvature obstructions and an
//! independent truncated-solution oracle, and the linear Pfaffian
//! correspondence.
//!
//! Reports are emitted as deterministic JSON (sorted object keys, rationals
//! as `"p/q"` strings) or as aligned text tables; repeated runs on the same
//! input are byte-identical.  Exit codes: `0` success, `2` malformed request
//! or input file (with a location), `3` failed mathematical precondition
//! (with an explanation), `4` internal invariant breach.

mod render;

use std::panic::AssertUnwindSafe;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use spencer_lab_core::exactla::{parse_rational, rat};
use spencer_lab_core::multilinear::multi_indices;
use spencer_lab_core::{
    acyclicity_report, check_pfaffian, connection_applied, finite_type_analysis,
    formal_integrability_report, kernel_distribution, prolong_tower, prolongations,
    pullback_along, reduced_curvature, spencer_cohomology, stabilization_order, to_connection,
    to_form, truncated_solution_dim, validate_compatible, validate_tower, ConnectionFile,
    ConstantRelativeConnection, JetPoint, LinearPfaffianForm, OracleRow, PfaffianError,
    PolynomialMap, Rational, RelConnError, Tableau, TableauError, TableauFile, Tower, TowerReport,
};

#[derive(Parser)]
#[command(
    name = "spencer-lab",
    version,
    about = "Exact analysis of linear PDE symbols: tableaux, Spencer cohomology, \
             relative connections, and Pfaffian forms"
)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

impl Format {
    fn as_str(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Table => "table",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Tableau prolongation, Spencer cohomology, and stabilization.
    #[command(subcommand)]
    Tableau(TableauCmd),
    /// Relative-connection towers, curvature, and oracle comparison.
    #[command(subcommand)]
    Conn(ConnCmd),
    /// The linear Pfaffian correspondence.
    #[command(subcommand)]
    Pfaffian(PfaffianCmd),
}

#[derive(Subcommand)]
enum TableauCmd {
    /// Prolong a tableau and report the dimension at each level.
    Prolong {
        file: PathBuf,
        /// Number of prolongation levels to compute.
        #[arg(long, default_value_t = 1)]
        levels: usize,
    },
    /// Spencer cohomology dimensions over a window of prolongations.
    Cohomology {
        file: PathBuf,
        /// Largest prolongation level entering the window.
        #[arg(long, default_value_t = 2)]
        pmax: usize,
    },
    /// Check vanishing of low exterior-degree cohomology over a window.
    Acyclicity {
        file: PathBuf,
        /// Exterior degree up to which cohomology must vanish (default: n).
        #[arg(long)]
        r: Option<usize>,
        #[arg(long, default_value_t = 2)]
        pmax: usize,
    },
    /// Find the order from which prolongation becomes involutive.
    Stabilize {
        file: PathBuf,
        #[arg(long, default_value_t = 4)]
        bound: usize,
    },
    /// Validate an explicit chain of tableaux against prolongation.
    Tower {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ConnCmd {
    /// Prolongation tower, integrability hypotheses, optional oracle column.
    Analyze {
        file: PathBuf,
        #[arg(long, default_value_t = 3)]
        max_order: usize,
        /// Truncation degree for the independent solution-count oracle.
        #[arg(long)]
        oracle_degree: Option<usize>,
        /// Levels of degree-two cohomology checked for the verdict.
        #[arg(long, default_value_t = 2)]
        window: usize,
    },
    /// Curvature rank, reduced obstruction, and evaluation at a jet point.
    Curvature {
        file: PathBuf,
        /// Tower level at which the reduced obstruction is measured.
        #[arg(long, default_value_t = 0)]
        level: usize,
        /// Comma-separated rational jet coordinates (value block first,
        /// then one block per base direction).
        #[arg(long)]
        at_jet: Option<String>,
    },
    /// Search for a vanishing symbol prolongation within a bound.
    FiniteType {
        file: PathBuf,
        #[arg(long, default_value_t = 6)]
        bound: usize,
    },
    /// Check that one connection is a prolongation of another.
    Compatible { upper: PathBuf, lower: PathBuf },
    /// Compare tower ranks with the truncated-solution count.
    Oracle {
        file: PathBuf,
        #[arg(long, default_value_t = 3)]
        degree: usize,
    },
}

#[derive(Subcommand)]
enum PfaffianCmd {
    /// Read a connection as the linear 1-form carried by the same data.
    ToForm { file: PathBuf },
    /// Kernel distribution of the form at a fiber point.
    Kernel {
        file: PathBuf,
        /// Comma-separated rational fiber coordinates.
        #[arg(long)]
        at_fiber: String,
    },
    /// Transversality and vertical-part checks.
    Check { file: PathBuf },
    /// Round-trip the correspondence and test the pullback law on sections.
    Roundtrip {
        file: PathBuf,
        /// Number of deterministic test sections.
        #[arg(long, default_value_t = 5)]
        sections: usize,
        /// Polynomial degree of the test sections.
        #[arg(long, default_value_t = 3)]
        degree: usize,
    },
}

// ---------------------------------------------------------------------------
// Errors and exit codes
// ---------------------------------------------------------------------------

enum CliError {
    /// Malformed request or input file (exit 2).
    Schema { location: String, message: String },
    /// A mathematical precondition failed on well-formed input (exit 3).
    Math { message: String },
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema { .. } => 2,
            CliError::Math { .. } => 3,
        }
    }

    fn render(&self) -> String {
        match self {
            CliError::Schema { location, message } => {
                format!("schema violation at {location}: {message}")
            }
            CliError::Math { message } => format!("precondition failed: {message}"),
        }
    }
}

fn math_error(e: impl std::fmt::Display) -> CliError {
    CliError::Math {
        message: e.to_string(),
    }
}

// ---------------------------------------------------------------------------
// Input loading
// ---------------------------------------------------------------------------

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Schema {
        location: path.display().to_string(),
        message: e.to_string(),
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Schema {
        location: format!("{}:{}:{}", path.display(), e.line(), e.column()),
        message: e.to_string(),
    })
}

fn check_schema_tag(path: &Path, tag: &str) -> Result<(), CliError> {
    if tag != spencer_lab_core::SCHEMA {
        return Err(CliError::Schema {
            location: format!("{} (schema)", path.display()),
            message: format!(
                "expected schema {:?}, got {:?}",
                spencer_lab_core::SCHEMA,
                tag
            ),
        });
    }
    Ok(())
}

fn load_tableau(path: &Path) -> Result<Tableau, CliError> {
    let file: TableauFile = read_json(path)?;
    check_schema_tag(path, &file.schema)?;
    Tableau::from_file(&file).map_err(|e| {
        let location = match &e {
            TableauError::BadGenerator { row, col, .. } => {
                format!("{}: generators[{row}][{col}]", path.display())
            }
            _ => path.display().to_string(),
        };
        CliError::Schema {
            location,
            message: e.to_string(),
        }
    })
}

fn connection_file_error(path: &Path, e: RelConnError) -> CliError {
    match &e {
        // Non-surjective anchors are a mathematical precondition, not a
        // malformed file.
        RelConnError::NotSurjective { .. } => CliError::Math {
            message: format!("{}: {e}", path.display()),
        },
        RelConnError::BadMatrixEntry {
            which, row, col, ..
        } => CliError::Schema {
            location: format!("{}: {which}[{row}][{col}]", path.display()),
            message: e.to_string(),
        },
        _ => CliError::Schema {
            location: path.display().to_string(),
            message: e.to_string(),
        },
    }
}

fn load_connection(path: &Path) -> Result<ConstantRelativeConnection, CliError> {
    let file: ConnectionFile = read_json(path)?;
    check_schema_tag(path, &file.schema)?;
    ConstantRelativeConnection::from_file(&file).map_err(|e| connection_file_error(path, e))
}

fn load_form(path: &Path) -> Result<LinearPfaffianForm, CliError> {
    let file: ConnectionFile = read_json(path)?;
    check_schema_tag(path, &file.schema)?;
    LinearPfaffianForm::from_file(&file).map_err(|e| match e {
        PfaffianError::Construction(inner) => connection_file_error(path, inner),
        other => CliError::Schema {
            location: path.display().to_string(),
            message: other.to_string(),
        },
    })
}

fn parse_rational_csv(text: &str, flag: &str) -> Result<Vec<Rational>, CliError> {
    text.split(',')
        .map(|part| {
            parse_rational(part).map_err(|e| CliError::Schema {
                location: flag.to_string(),
                message: e.to_string(),
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Oracle fan-out
// ---------------------------------------------------------------------------

fn worker_cap(tasks: usize) -> usize {
    let requested = std::env::var("SPENCER_LAB_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&v| v > 0);
    let default = std::thread::available_parallelism()
        .map(usize::from)
        .unwrap_or(1);
    requested.unwrap_or(default).min(tasks.max(1))
}

/// Truncated solution counts for degrees `0..=degree`, fanned out over at
/// most `SPENCER_LAB_THREADS` workers and assembled by level, so the result
/// is independent of the thread count.
fn truncated_dims(c: &ConstantRelativeConnection, degree: usize) -> Vec<usize> {
    let cap = worker_cap(degree + 1);
    let mut dims = vec![0usize; degree + 1];
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..cap)
            .map(|t| {
                let levels: Vec<usize> = (t..=degree).step_by(cap).collect();
                scope.spawn(move || {
                    levels
                        .into_iter()
                        .map(|k| (k, truncated_solution_dim(c, k)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for handle in handles {
            for (k, d) in handle.join().expect("oracle workers do not panic") {
                dims[k] = d;
            }
        }
    });
    dims
}

/// Joins independently computed truncation counts with tower ranks.
fn oracle_rows(tower: &TowerReport, dims: &[usize]) -> Vec<OracleRow> {
    dims.iter()
        .enumerate()
        .map(|(k, &truncated_dim)| {
            let tower_rank = tower.rows.get(k).map(|r| r.prolongation_rank);
            OracleRow {
                level: k,
                truncated_dim,
                tower_rank,
                agree: tower_rank.map(|r| r == truncated_dim),
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Report emission
// ---------------------------------------------------------------------------

struct Output {
    request: Value,
    results: Value,
    table: String,
}

#[derive(Serialize)]
struct Report<'a> {
    schema: &'static str,
    version: &'static str,
    request: &'a Value,
    results: &'a Value,
}

fn request_echo(command: &str, inputs: &[&Path], parameters: Value, format: Format) -> Value {
    let inputs: Vec<String> = inputs.iter().map(|p| p.display().to_string()).collect();
    json!({
        "command": command,
        "inputs": inputs,
        "parameters": parameters,
        "format": format.as_str(),
    })
}

fn emit(out: &Output, format: Format) {
    match format {
        Format::Json => {
            let report = Report {
                schema: spencer_lab_core::SCHEMA,
                version: env!("CARGO_PKG_VERSION"),
                request: &out.request,
                results: &out.results,
            };
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("reports serialize")
            );
        }
        Format::Table => {
            println!("spencer-lab {}", env!("CARGO_PKG_VERSION"));
            println!(
                "request: {}",
                serde_json::to_string(&out.request).expect("requests serialize")
            );
            println!();
            print!("{}", out.table);
        }
    }
}

// ---------------------------------------------------------------------------
// Command handlers
// ---------------------------------------------------------------------------

fn run(cli: &Cli) -> Result<Output, CliError> {
    let format = cli.format;
    match &cli.command {
        Command::Tableau(cmd) => match cmd {
            TableauCmd::Prolong { file, levels } => tableau_prolong(file, *levels, format),
            TableauCmd::Cohomology { file, pmax } => tableau_cohomology(file, *pmax, format),
            TableauCmd::Acyclicity { file, r, pmax } => {
                tableau_acyclicity(file, *r, *pmax, format)
            }
            TableauCmd::Stabilize { file, bound } => tableau_stabilize(file, *bound, format),
            TableauCmd::Tower { files } => tableau_tower(files, format),
        },
        Command::Conn(cmd) => match cmd {
            ConnCmd::Analyze {
                file,
                max_order,
                oracle_degree,
                window,
            } => conn_analyze(file, *max_order, *oracle_degree, *window, format),
            ConnCmd::Curvature {
                file,
                level,
                at_jet,
            } => conn_curvature(file, *level, at_jet.as_deref(), format),
            ConnCmd::FiniteType { file, bound } => conn_finite_type(file, *bound, format),
            ConnCmd::Compatible { upper, lower } => conn_compatible(upper, lower, format),
            ConnCmd::Oracle { file, degree } => conn_oracle(file, *degree, format),
        },
        Command::Pfaffian(cmd) => match cmd {
            PfaffianCmd::ToForm { file } => pfaffian_to_form(file, format),
            PfaffianCmd::Kernel { file, at_fiber } => pfaffian_kernel(file, at_fiber, format),
            PfaffianCmd::Check { file } => pfaffian_check_cmd(file, format),
            PfaffianCmd::Roundtrip {
                file,
                sections,
                degree,
            } => pfaffian_roundtrip(file, *sections, *degree, format),
        },
    }
}

fn tableau_prolong(file: &Path, levels: usize, format: Format) -> Result<Output, CliError> {
    let t = load_tableau(file)?;
    let chain = prolongations(&t, levels);
    let dims: Vec<usize> = chain.iter().map(Tableau::dim).collect();
    let request = request_echo(
        "tableau prolong",
        &[file],
        json!({ "levels": levels }),
        format,
    );
    let results = json!({
        "base_order": t.k(),
        "base_dim": dims[0],
        "prolongation_dims": dims[1..],
    });
    let rows: Vec<Vec<String>> = chain
        .iter()
        .enumerate()
        .map(|(i, s)| vec![i.to_string(), s.k().to_string(), s.dim().to_string()])
        .collect();
    let table = render::aligned_table(&["level", "order", "dim"], &rows);
    Ok(Output {
        request,
        results,
        table,
    })
}

fn tableau_cohomology(file: &Path, pmax: usize, format: Format) -> Result<Output, CliError> {
    let t = load_tableau(file)?;
    let table_data = spencer_cohomology(&t, pmax);
    let request = request_echo(
        "tableau cohomology",
        &[file],
        json!({ "pmax": pmax }),
        format,
    );
    let mut results = render::cohomology_json(&table_data);
    results["n"] = json!(t.n());
    results["m"] = json!(t.m());
    results["k"] = json!(t.k());
    let rows: Vec<Vec<String>> = table_data
        .entries
        .iter()
        .map(|(&(sym, ext), e)| {
            vec![
                sym.to_string(),
                ext.to_string(),
                e.kernel_dim.to_string(),
                e.image_dim.to_string(),
                e.cohomology_dim.to_string(),
            ]
        })
        .collect();
    let table = render::aligned_table(
        &["sym degree", "ext degree", "kernel", "image", "cohomology"],
        &rows,
    );
    Ok(Output {
        request,
        results,
        table,
    })
}

fn tableau_acyclicity(
    file: &Path,
    r: Option<usize>,
    pmax: usize,
    format: Format,
) -> Result<Output, CliError> {
    let t = load_tableau(file)?;
    let r = r.unwrap_or(t.n());
    let report = acyclicity_report(&t, r, pmax);
    let request = request_echo(
        "tableau acyclicity",
        &[file],
        json!({ "r": r, "pmax": pmax }),
        format,
    );
    let results = render::acyclicity_json(&report);
    let table = render::value_lines(&results);
    Ok(Output {
        request,
        results,
        table,
    })
}

fn tableau_stabilize(file: &Path, bound: usize, format: Format) -> Result<Output, CliError> {
    let t = load_tableau(file)?;
    let order = stabilization_order(&t, bound);
    let request = request_echo(
        "tableau stabilize",
        &[file],
        json!({ "bound": bound }),
        format,
    );
    let results = json!({
        "bound": bound,
        "stabilization_order": order.map(Into::<Value>::into).unwrap_or(Value::Null),
    });
    let table = render::value_lines(&results);
    Ok(Output {
        request,
        results,
        table,
    })
}

fn tableau_tower(files: &[PathBuf], format: Format) -> Result<Output, CliError> {
    let levels: Vec<Tableau> = files
        .iter()
        .map(|f| load_tableau(f))
        .collect::<Result<_, _>>()?;
    let tower = Tower::new(levels).map_err(math_error)?;
    let validation = validate_tower(&tower);
    let orders_dims: Vec<(usize, usize)> = tower
        .levels()
        .iter()
        .map(|t| (t.k(), t.dim()))
        .collect();
    let inputs: Vec<&Path> = files.iter().map(PathBuf::as_path).collect();
    let request = request_echo("tableau tower", &inputs, json!({}), format);
    let results = render::tower_validation_json(&orders_dims, &validation);
    let table = render::value_lines(&results);
    Ok(Output {
        request,
        results,
        table,
    })
}

fn conn_analyze(
    file: &Path,
    max_order: usize,
    oracle_degree: Option<usize>,
    window: usize,
    format: Format,
) -> Result<Output, CliError> {
    let c = load_connection(file)?;
    let tower = prolong_tower(&c, max_order);
    let integrability = formal_integrability_report(&c, window);
    let oracle = oracle_degree.map(|d| oracle_rows(&tower, &truncated_dims(&c, d)));
    let request = request_echo(
        "conn analyze",
        &[file],
        json!({
            "max_order": max_order,
            "oracle_degree": oracle_degree.map(Into::<Value>::into).unwrap_or(Value::Null),
            "window": window,
        }),
        format,
    );
    let integrability_json = render::integrability_json(&integrability);
    let results = json!({
        "tower": render::tower_json(&tower),
        "integrability": integrability_json,
        "oracle": oracle
            .as_ref()
            .map(|rows| render::oracle_rows_json(rows))
            .unwrap_or(Value::Null),
    });
    let mut table = render::tower_table(&tower, oracle.as_deref());
    table.push('\n');
    table.push_str(&render::value_lines(&integrability_json));
    Ok(Output {
        request,
        results,
        table,
    })
}

fn conn_curvature(
    file: &Path,
    level: usize,
    at_jet: Option<&str>,
    format: Format,
) -> Result<Output, CliError> {
    let c = load_connection(file)?;
    let reduced = reduced_curvature(&c, level).map_err(math_error)?;
    let curvature = c.curvature_matrix();
    let at_jet_value = match at_jet {
        None => Value::Null,
        Some(text) => {
            let flat = parse_rational_csv(text, "--at-jet")?;
            let point = JetPoint::from_flat(c.n(), c.f_rank(), &flat).map_err(|e| {
                CliError::Schema {
                    location: "--at-jet".to_string(),
                    message: e.to_string(),
                }
            })?;
            let values = c.curvature_at(&point).map_err(math_error)?;
            let b = c.e_rank();
            let rows: Vec<Value> = if b == 0 {
                Vec::new()
            } else {
                values.chunks(b).map(render::rationals_json).collect()
            };
            json!({
                "point": render::rationals_json(&flat),
                "value": rows,
            })
        }
    };
    let request = request_echo(
        "conn curvature",
        &[file],
        json!({
            "level": level,
            "at_jet": at_jet.map(Into::<Value>::into).unwrap_or(Value::Null),
        }),
        format,
    );
    let results = json!({
        "jet_space_dim": c.partial_prolongation().dim(),
        "prolongation_space_dim": c.prolongation_space().dim(),
        "curvature_rank": curvature.rank(),
        "reduced": render::reduced_curvature_json(&reduced),
        "at_jet": at_jet_value,
    });
    let table = render::value_lines(&results);
    Ok(Output {
        request,
        results,
        table,
    })
}

fn conn_finite_type(file: &Path, bound: usize, format: Format) -> Result<Output, CliError> {
    let c = load_connection(file)?;
    let report = finite_type_analysis(&c, bound);
    let request = request_echo(
        "conn finite-type",
        &[file],
        json!({ "bound": bound }),
        format,
    );
    let results = render::finite_type_json(&report);
    let table = render::value_lines(&results);
    Ok(Output {
        request,
        results,
        table,
    })
}

fn conn_compatible(upper: &Path, lower: &Path, format: Format) -> Result<Output, CliError> {
    let upper_c = load_connection(upper)?;
    let lower_c = load_connection(lower)?;
    let report = validate_compatible(&upper_c, &lower_c).map_err(math_error)?;
    let request = request_echo("conn compatible", &[upper, lower], json!({}), format);
    let results = render::compatibility_json(&report);
    let table = render::value_lines(&results);
    Ok(Output {
        request,
        results,
        table,
    })
}

fn conn_oracle(file: &Path, degree: usize, format: Format) -> Result<Output, CliError> {
    let c = load_connection(file)?;
    let tower = prolong_tower(&c, degree);
    let rows = oracle_rows(&tower, &truncated_dims(&c, degree));
    let request = request_echo("conn oracle", &[file], json!({ "degree": degree }), format);
    let results = json!({
        "tower": render::tower_json(&tower),
        "rows": render::oracle_rows_json(&rows),
    });
    let table = render::tower_table(&tower, Some(&rows));
    Ok(Output {
        request,
        results,
        table,
    })
}

fn pfaffian_to_form(file: &Path, format: Format) -> Result<Output, CliError> {
    let c = load_connection(file)?;
    let f = to_form(&c);
    let request = request_echo("pfaffian to-form", &[file], json!({}), format);
    let results = json!({
        "form": render::connection_file_json(&f.to_file()),
        "base_dim": f.n(),
        "fiber_rank": f.f_rank(),
        "corank": f.e_rank(),
    });
    let table = render::value_lines(&results);
    Ok(Output {
        request,
        results,
        table,
    })
}

fn pfaffian_kernel(file: &Path, at_fiber: &str, format: Format) -> Result<Output, CliError> {
    let f = load_form(file)?;
    let e = parse_rational_csv(at_fiber, "--at-fiber")?;
    let kernel = kernel_distribution(&f, &e).map_err(|err| match err {
        PfaffianError::FiberPointLength { .. } => CliError::Schema {
            location: "--at-fiber".to_string(),
            message: err.to_string(),
        },
        other => math_error(other),
    })?;
    let request = request_echo(
        "pfaffian kernel",
        &[file],
        json!({ "at_fiber": at_fiber }),
        format,
    );
    let results = json!({
        "at_fiber": render::rationals_json(&e),
        "ambient_dim": kernel.ambient_dim(),
        "dim": kernel.dim(),
        "basis": render::matrix_json(kernel.basis()),
    });
    let table = render::value_lines(&results);
    Ok(Output {
        request,
        results,
        table,
    })
}

fn pfaffian_check_cmd(file: &Path, format: Format) -> Result<Output, CliError> {
    let f = load_form(file)?;
    let check = check_pfaffian(&f);
    let request = request_echo("pfaffian check", &[file], json!({}), format);
    let results = render::pfaffian_check_json(&check);
    let table = render::value_lines(&results);
    Ok(Output {
        request,
        results,
        table,
    })
}

/// A polynomial section with small deterministic pseudo-random
/// coefficients, reproducible across runs.
fn test_section(n: usize, a: usize, degree: usize, salt: u64) -> PolynomialMap {
    let mut state = salt
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(0xD1B5_4A32_D192_ED03);
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        state
    };
    let mut s = PolynomialMap::new(n, a);
    for deg in 0..=degree {
        for exp in multi_indices(n, deg) {
            let exp: Vec<usize> = exp.iter().map(|&e| e as usize).collect();
            let value: Vec<Rational> = (0..a).map(|_| rat((next() % 7) as i64 - 3)).collect();
            s.set_coefficient(&exp, &value)
                .expect("exponent and value lengths match by construction");
        }
    }
    s
}

fn pfaffian_roundtrip(
    file: &Path,
    sections: usize,
    degree: usize,
    format: Format,
) -> Result<Output, CliError> {
    let c = load_connection(file)?;
    let f = to_form(&c);
    let identity = to_connection(&f).to_file() == c.to_file();
    let mut pullback_matches = true;
    for index in 0..sections {
        let s = test_section(c.n(), c.f_rank(), degree, index as u64);
        let direct = connection_applied(&c, &s).expect("section shape is valid by construction");
        let pulled = pullback_along(&f, &s).expect("section shape is valid by construction");
        if direct != pulled {
            pullback_matches = false;
        }
    }
    let request = request_echo(
        "pfaffian roundtrip",
        &[file],
        json!({ "sections": sections, "degree": degree }),
        format,
    );
    let results = json!({
        "identity": identity,
        "sections_checked": sections,
        "pullback_matches": pullback_matches,
    });
    let table = render::value_lines(&results);
    Ok(Output {
        request,
        results,
        table,
    })
}

fn main() {
    let cli = Cli::parse();
    let format = cli.format;
    // Panics past this point are internal invariant breaches: silence the
    // default hook and report them on stderr with a dedicated exit code.
    std::panic::set_hook(Box::new(|_| {}));
    let outcome = std::panic::catch_unwind(AssertUnwindSafe(|| {
        run(&cli).map(|out| emit(&out, format))
    }));
    let code = match outcome {
        Ok(Ok(())) => 0,
        Ok(Err(e)) => {
            eprintln!("{}", e.render());
            e.exit_code()
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            eprintln!("internal invariant breach: {message}");
            4
        }
    };
    std::process::exit(code);
}
