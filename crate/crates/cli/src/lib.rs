//! `lca` command-line front end.
//!
//! Exit codes: 0 on success, 1 for domain and validation errors, 2 for I/O
//! and usage errors.

pub mod report;

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use lca_core::battery::{
    break_even_cycles, cell_energy_density, derive_evolution, mass_shares, pack_energy_density, size_anode,
    AnodeSizingInput, CellDesign, PackDesign,
};
use lca_core::dataio::{parse, Dataset};
use lca_core::inventory::InventoryDatabase;
use lca_core::lcia::ImpactMethod;
use lca_core::model::{assess, component_contributions};
use lca_core::scenario::{apply_scenario, compare, run_sweep, Scenario};

use report::{Format, Report};

#[derive(Debug, Parser)]
#[command(name = "lca", version, about = "Life-cycle assessment of battery cells and packs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "table")]
    pub format: Format,
    /// Write the report to this file instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Selection {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Impact method id; optional when the dataset defines exactly one.
    #[arg(long)]
    pub method: Option<String>,
    /// Pack id; optional when the dataset defines exactly one.
    #[arg(long)]
    pub pack: Option<String>,
    /// Scenario applied before evaluation.
    #[arg(long)]
    pub scenario: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate a dataset.
    Validate {
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Per-Wh impacts of a cell in a pack.
    Impacts {
        #[command(flatten)]
        sel: Selection,
        #[arg(long)]
        cell: String,
    },
    /// Contributions of component groups to each impact category.
    Contrib {
        #[command(flatten)]
        sel: Selection,
        #[arg(long)]
        cell: String,
    },
    /// Derive optimized cell layouts; all evolutions when none is named.
    Evolve {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        evolution: Option<String>,
        /// Pack used for the pack energy density.
        #[arg(long)]
        pack: Option<String>,
    },
    /// Size a metal-foil anode that is also its own current collector.
    Anode(AnodeArgs),
    /// Cycles needed before delivered energy exceeds the production CED.
    Breakeven {
        /// Cumulative energy demand, Wh per Wh of capacity.
        ced: f64,
        /// Energy returned per cycle, Wh per Wh of capacity.
        energy_return: f64,
    },
    /// Compare systems per Wh across impact categories.
    Compare {
        #[command(flatten)]
        sel: Selection,
    },
    /// Evaluate every scenario for every cell (or the named ones).
    ScenarioSweep {
        #[command(flatten)]
        sel: Selection,
        #[arg(long)]
        cell: Vec<String>,
    },
}

#[derive(Debug, Args)]
pub struct AnodeArgs {
    #[arg(long, default_value_t = 74.0)]
    pub area_cm2: f64,
    #[arg(long, default_value_t = 421.0)]
    pub cathode_mass_mg: f64,
    /// Ah/g
    #[arg(long, default_value_t = 1.67)]
    pub cathode_capacity: f64,
    /// Ah/g
    #[arg(long, default_value_t = 2.205)]
    pub anode_capacity: f64,
    #[arg(long, default_value_t = 4.4)]
    pub reference_thickness_um: f64,
    #[arg(long, default_value_t = 0.5)]
    pub conductivity_ratio: f64,
    /// g/cm³
    #[arg(long, default_value_t = 1.738)]
    pub density: f64,
    /// Anode mass of the existing cell, mg.
    #[arg(long, default_value_t = 427.0)]
    pub prototype_mass_mg: f64,
}

/// A failed command: exit code plus the lines written to standard error.
#[derive(Debug)]
pub struct Failure {
    pub exit_code: i32,
    pub lines: Vec<String>,
}

impl Failure {
    fn domain(code: &str, message: impl fmt::Display) -> Self {
        Failure {
            exit_code: 1,
            lines: vec![format!("error[{code}]: {message}")],
        }
    }

    fn io(path: &Path, err: io::Error) -> Self {
        Failure {
            exit_code: 2,
            lines: vec![format!("error[IO]: {}: {err}", path.display())],
        }
    }
}

macro_rules! domain {
    ($e:expr) => {
        $e.map_err(|e| Failure::domain(e.code(), &e))
    };
}

fn load(path: &Path) -> Result<(Dataset, Vec<String>), Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::io(path, e))?;
    match parse(&bytes) {
        Ok(parsed) => Ok((parsed.dataset, parsed.warnings.iter().map(|d| d.to_string()).collect())),
        Err(diags) => Err(Failure {
            exit_code: 1,
            lines: diags.iter().map(|d| d.to_string()).collect(),
        }),
    }
}

fn pick<'a, T>(items: &'a [T], id: Option<&str>, what: &str, key: impl Fn(&T) -> &str) -> Result<&'a T, Failure> {
    match id {
        Some(id) => items
            .iter()
            .find(|x| key(x) == id)
            .ok_or_else(|| Failure::domain("UNKNOWN_ID", format!("no {what} `{id}` in the dataset"))),
        None if items.len() == 1 => Ok(&items[0]),
        None => Err(Failure::domain(
            "UNKNOWN_ID",
            format!("the dataset defines {} {what}s; choose one with --{what}", items.len()),
        )),
    }
}

/// The system a selection evaluates: the dataset with the scenario applied.
struct Resolved<'a> {
    ds: &'a Dataset,
    method: &'a ImpactMethod,
    pack: &'a PackDesign,
    db: InventoryDatabase,
    cells: Vec<CellDesign>,
}

impl Resolved<'_> {
    fn cell(&self, name: &str) -> Result<&CellDesign, Failure> {
        self.cells
            .iter()
            .find(|c| c.name() == name)
            .ok_or_else(|| Failure::domain("UNKNOWN_ID", format!("no cell `{name}` in the dataset")))
    }
}

fn resolve<'a>(ds: &'a Dataset, sel: &Selection) -> Result<Resolved<'a>, Failure> {
    let method = pick(&ds.methods, sel.method.as_deref(), "method", |m| &m.id)?;
    let pack = pick(&ds.packs, sel.pack.as_deref(), "pack", |p| &p.id)?;
    let (db, cells) = match &sel.scenario {
        None => (ds.database.clone(), ds.cells.clone()),
        Some(id) => {
            let sc = pick(&ds.scenarios, Some(id), "scenario", |s| &s.id)?;
            domain!(apply_scenario(&ds.database, &ds.cells, sc))?
        }
    };
    Ok(Resolved {
        ds,
        method,
        pack,
        db,
        cells,
    })
}

fn unit_of(method: &ImpactMethod, category: &str) -> String {
    method.category(category).map(|c| c.unit.clone()).unwrap_or_default()
}

fn impacts(ds: &Dataset, sel: &Selection, cell: &str) -> Result<Report, Failure> {
    let r = resolve(ds, sel)?;
    let a = domain!(assess(&r.db, r.cell(cell)?, r.pack, r.method))?;
    let mut report = Report::new(&["category", "value", "unit", "coverage"]);
    for c in r.method.categories() {
        report.push(vec![
            c.id.as_str().into(),
            a.impacts.per_category[&c.id].into(),
            format!("{} per Wh", c.unit).into(),
            a.impacts.coverage[&c.id].into(),
        ]);
    }
    Ok(report)
}

fn contrib(ds: &Dataset, sel: &Selection, cell: &str) -> Result<Report, Failure> {
    let r = resolve(ds, sel)?;
    let t = domain!(component_contributions(&r.db, r.cell(cell)?, r.pack, r.method))?;
    let mut report = Report::new(&["category", "group", "value", "share", "unit"]);
    for category in &t.categories {
        for label in &t.labels {
            if let Some(row) = t.row(category, label) {
                report.push(vec![
                    category.as_str().into(),
                    label.as_str().into(),
                    row.value.into(),
                    row.share.into(),
                    format!("{} per Wh", unit_of(r.method, category)).into(),
                ]);
            }
        }
    }
    Ok(report)
}

fn evolve(ds: &Dataset, evolution: Option<&str>, pack: Option<&str>) -> Result<Report, Failure> {
    let defs: Vec<_> = match evolution {
        Some(id) => vec![pick(&ds.evolutions, Some(id), "evolution", |e| &e.id)?],
        None => ds.evolutions.iter().collect(),
    };
    let pack = match (pack, ds.packs.len()) {
        (None, 0) => None,
        (p, _) => Some(pick(&ds.packs, p, "pack", |p| &p.id)?),
    };
    let mut report = Report::new(&["cell", "quantity", "value", "unit"]);
    for def in defs {
        let base = ds
            .cell(&def.base)
            .ok_or_else(|| Failure::domain("UNKNOWN_ID", format!("no cell `{}`", def.base)))?;
        let cell = domain!(derive_evolution(base, &def.spec))?.renamed(def.name.clone());
        let shares = domain!(mass_shares(&cell))?;
        let name = cell.name().to_string();
        for c in cell.components() {
            report.push(vec![name.clone().into(), c.role.as_str().into(), c.mass_mg.into(), "mg".into()]);
        }
        report.push(vec![name.clone().into(), "total".into(), cell.total_mass_mg().into(), "mg".into()]);
        for c in cell.components() {
            report.push(vec![
                name.clone().into(),
                format!("{}_share", c.role.as_str()).into(),
                (100.0 * shares[&c.role]).into(),
                "%".into(),
            ]);
        }
        let density = domain!(cell_energy_density(&cell))?;
        report.push(vec![name.clone().into(), "cell_energy".into(), cell.cell_energy_wh().into(), "Wh".into()]);
        report.push(vec![name.clone().into(), "cell_energy_density".into(), density.into(), "Wh/kg".into()]);
        if let Some(pack) = pack {
            report.push(vec![
                name.clone().into(),
                "pack_energy_density".into(),
                pack_energy_density(density, pack).into(),
                "Wh/kg".into(),
            ]);
        }
    }
    Ok(report)
}

fn anode(a: &AnodeArgs) -> Result<Report, Failure> {
    let input = AnodeSizingInput {
        electrode_area_cm2: a.area_cm2,
        cathode_active_mass_mg: a.cathode_mass_mg,
        cathode_specific_capacity: a.cathode_capacity,
        anode_specific_capacity: a.anode_capacity,
        reference_collector_thickness_um: a.reference_thickness_um,
        conductivity_ratio: a.conductivity_ratio,
        anode_density_g_cm3: a.density,
    };
    let s = domain!(size_anode(&input))?;
    let mut report = Report::new(&["quantity", "value", "unit"]);
    report.push(vec!["collector_thickness".into(), s.collector_thickness_um.into(), "µm".into()]);
    report.push(vec!["collector_mass".into(), s.collector_mass_mg.into(), "mg".into()]);
    report.push(vec!["active_mass".into(), s.active_mass_mg.into(), "mg".into()]);
    report.push(vec!["total_mass".into(), s.total_mass_mg.into(), "mg".into()]);
    report.push(vec![
        "exceeds_prototype".into(),
        s.exceeds(a.prototype_mass_mg).into(),
        "".into(),
    ]);
    Ok(report)
}

fn breakeven(ced: f64, energy_return: f64) -> Result<Report, Failure> {
    let cycles = domain!(break_even_cycles(ced, energy_return))?;
    let mut report = Report::new(&["ced", "energy_return", "cycles"]);
    report.push(vec![ced.into(), energy_return.into(), cycles.into()]);
    Ok(report)
}

fn compare_cmd(ds: &Dataset, sel: &Selection) -> Result<Report, Failure> {
    let r = resolve(ds, sel)?;
    let entries = domain!(r.ds.comparison_entries(r.method, &r.db, &r.cells))?;
    let table = domain!(compare(&entries, r.method))?;
    let mut report = Report::new(&[
        "system",
        "original_density",
        "adjusted_density",
        "category",
        "value",
        "ratio_to_best",
        "best",
        "tie",
    ]);
    for system in &table.systems {
        let e = entries.iter().find(|e| &e.name == system).expect("table rows come from entries");
        for category in &table.categories {
            let cell = table.cell(system, category).expect("full table");
            let ranking = &table.rankings[category];
            report.push(vec![
                system.as_str().into(),
                e.original_density.into(),
                e.adjusted_density.into(),
                category.as_str().into(),
                cell.value.into(),
                cell.ratio_to_best.into(),
                (ranking.best == *system).into(),
                ranking.tie.into(),
            ]);
        }
    }
    Ok(report)
}

fn sweep(ds: &Dataset, sel: &Selection, cells: &[String]) -> Result<Report, Failure> {
    let method = pick(&ds.methods, sel.method.as_deref(), "method", |m| &m.id)?;
    let pack = pick(&ds.packs, sel.pack.as_deref(), "pack", |p| &p.id)?;
    let chosen: Vec<CellDesign> = if cells.is_empty() {
        ds.cells.clone()
    } else {
        cells
            .iter()
            .map(|n| pick(&ds.cells, Some(n), "cell", |c| c.name()).cloned())
            .collect::<Result<_, _>>()?
    };
    let mut scenarios: Vec<Scenario> = match &sel.scenario {
        Some(id) => vec![pick(&ds.scenarios, Some(id), "scenario", |s| &s.id)?.clone()],
        None => ds.scenarios.clone(),
    };
    scenarios.push(Scenario::new("", Vec::new()));
    let rows = domain!(run_sweep(&ds.database, &chosen, pack, method, &scenarios))?;

    let baseline = |cell: &str, category: &str| {
        rows.iter()
            .find(|r| r.scenario.is_empty() && r.cell == cell)
            .map(|r| r.impacts.per_category[category])
            .unwrap_or(f64::NAN)
    };
    let mut report = Report::new(&["scenario", "cell", "category", "value", "change"]);
    for row in &rows {
        for c in method.categories() {
            let value = row.impacts.per_category[&c.id];
            let base = baseline(&row.cell, &c.id);
            let change = if value == base { 0.0 } else { value / base - 1.0 };
            let scenario = if row.scenario.is_empty() { "baseline" } else { row.scenario.as_str() };
            report.push(vec![
                scenario.into(),
                row.cell.as_str().into(),
                c.id.as_str().into(),
                value.into(),
                change.into(),
            ]);
        }
    }
    Ok(report)
}

/// Runs one command, writing the report to `stdout` (or `--out`) and
/// diagnostics to `stderr`. Returns the process exit code.
pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let mut warnings = Vec::new();
    let mut with_dataset = |path: &Path| -> Result<Dataset, Failure> {
        let (ds, w) = load(path)?;
        warnings.extend(w);
        Ok(ds)
    };
    let result = match &cli.command {
        Command::Validate { dataset } => with_dataset(dataset).map(|ds| {
            let mut r = Report::new(&["item", "count"]);
            r.push(vec!["flows".into(), (ds.database.flow_count() as u64).into()]);
            r.push(vec!["processes".into(), (ds.database.process_count() as u64).into()]);
            r.push(vec!["methods".into(), (ds.methods.len() as u64).into()]);
            r.push(vec!["cells".into(), (ds.cells.len() as u64).into()]);
            r.push(vec!["packs".into(), (ds.packs.len() as u64).into()]);
            r.push(vec!["scenarios".into(), (ds.scenarios.len() as u64).into()]);
            r.push(vec!["comparisons".into(), (ds.comparisons.len() as u64).into()]);
            r.push(vec!["evolutions".into(), (ds.evolutions.len() as u64).into()]);
            r
        }),
        Command::Impacts { sel, cell } => with_dataset(&sel.dataset).and_then(|ds| impacts(&ds, sel, cell)),
        Command::Contrib { sel, cell } => with_dataset(&sel.dataset).and_then(|ds| contrib(&ds, sel, cell)),
        Command::Evolve {
            dataset,
            evolution,
            pack,
        } => with_dataset(dataset).and_then(|ds| evolve(&ds, evolution.as_deref(), pack.as_deref())),
        Command::Anode(a) => anode(a),
        Command::Breakeven { ced, energy_return } => breakeven(*ced, *energy_return),
        Command::Compare { sel } => with_dataset(&sel.dataset).and_then(|ds| compare_cmd(&ds, sel)),
        Command::ScenarioSweep { sel, cell } => with_dataset(&sel.dataset).and_then(|ds| sweep(&ds, sel, cell)),
    };

    for w in &warnings {
        let _ = writeln!(stderr, "{w}");
    }
    let report = match result {
        Ok(r) => r,
        Err(f) => {
            for line in &f.lines {
                let _ = writeln!(stderr, "{line}");
            }
            return f.exit_code;
        }
    };

    let written = match &cli.out {
        None => report.render(cli.format, stdout),
        Some(path) => {
            let mut buf = Vec::new();
            report.render(cli.format, &mut buf).and_then(|()| fs::write(path, buf))
        }
    };
    match written {
        Ok(()) => 0,
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => 0,
        Err(e) => {
            let target = cli.out.as_deref().unwrap_or(Path::new("<stdout>"));
            let _ = writeln!(stderr, "error[IO]: {}: {e}", target.display());
            2
        }
    }
}
