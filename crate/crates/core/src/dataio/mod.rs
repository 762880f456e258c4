//! The `.lca.json` dataset format.
//!
//! A document carries `format_version` plus arrays of flows, processes,
//! methods, cells, packs, scenarios, comparisons and evolutions. Amounts are
//! written as a number with a unit symbol and converted on load; cell masses
//! are kept in mg, cell energy in Wh and pack mass in kg. Densities and
//! shares are bare numbers (Wh/kg and fractions).
//!
//! Parsing never panics. Errors and warnings come back as diagnostics whose
//! `path` is a JSON pointer to the offending element.

mod emit;
mod read;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde_json::Value;

use crate::battery::{
    cell_energy_density, derive_evolution, pack_energy_density, CellComponent, CellDesign, EvolutionSpec, PackDesign,
    Role,
};
use crate::inventory::{
    validate_database, DatabaseMetadata, Direction, Exchange, FindingCode, Flow, FlowKind, InventoryDatabase, Process,
};
use crate::lcia::{ImpactCategory, ImpactMethod, ImpactResult};
use crate::model::{assess, ModelError};
use crate::scenario::{ComparisonEntry, Override, Scenario};

pub use emit::emit;
use read::{join, Object, Reader};

pub const FORMAT_VERSION: &str = "1.0";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseDiagnostic {
    pub severity: Severity,
    /// JSON pointer into the document.
    pub path: String,
    pub code: String,
    pub message: String,
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}] {}: {}", self.severity.as_str(), self.code, self.path, self.message)
    }
}

/// Where a comparison entry's per-Wh impacts come from.
#[derive(Debug, Clone, PartialEq)]
pub enum ComparisonSource {
    /// Values taken from the literature, in the named method.
    Reported(ImpactResult),
    /// Computed from a cell and pack of the dataset.
    Modeled { cell: String, pack: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonSpec {
    pub name: String,
    /// Wh/kg. Modeled entries default to the computed pack density.
    pub original_density: Option<f64>,
    pub adjusted_density: Option<f64>,
    pub source: ComparisonSource,
}

/// A named derivation of a new cell from a base cell.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionDef {
    pub id: String,
    pub base: String,
    /// Name of the derived cell.
    pub name: String,
    pub spec: EvolutionSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub format_version: String,
    pub database: InventoryDatabase,
    pub methods: Vec<ImpactMethod>,
    pub cells: Vec<CellDesign>,
    pub packs: Vec<PackDesign>,
    pub scenarios: Vec<Scenario>,
    pub comparisons: Vec<ComparisonSpec>,
    pub evolutions: Vec<EvolutionDef>,
}

impl Dataset {
    pub fn method(&self, id: &str) -> Option<&ImpactMethod> {
        self.methods.iter().find(|m| m.id == id)
    }

    pub fn cell(&self, name: &str) -> Option<&CellDesign> {
        self.cells.iter().find(|c| c.name() == name)
    }

    pub fn pack(&self, id: &str) -> Option<&PackDesign> {
        self.packs.iter().find(|p| p.id == id)
    }

    pub fn scenario(&self, id: &str) -> Option<&Scenario> {
        self.scenarios.iter().find(|s| s.id == id)
    }

    pub fn evolution(&self, id: &str) -> Option<&EvolutionDef> {
        self.evolutions.iter().find(|e| e.id == id)
    }

    /// Comparison entries under `method`. Modeled entries are evaluated
    /// against `db` and the dataset's cells; reported entries are copied.
    pub fn comparison_entries(
        &self,
        method: &ImpactMethod,
        db: &InventoryDatabase,
        cells: &[CellDesign],
    ) -> Result<Vec<ComparisonEntry>, ModelError> {
        self.comparisons
            .iter()
            .map(|spec| {
                let (impacts, density) = match &spec.source {
                    ComparisonSource::Reported(r) => (r.clone(), None),
                    ComparisonSource::Modeled { cell, pack } => {
                        let cell = cells
                            .iter()
                            .find(|c| c.name() == cell)
                            .ok_or_else(|| ModelError::NoProvider(cell.clone()))?;
                        let pack = self.pack(pack).ok_or_else(|| ModelError::NoProvider(pack.clone()))?;
                        let density = pack_energy_density(cell_energy_density(cell)?, pack);
                        (assess(db, cell, pack, method)?.impacts, Some(density))
                    }
                };
                Ok(ComparisonEntry {
                    name: spec.name.clone(),
                    original_density: spec.original_density.or(density).unwrap_or(0.0),
                    adjusted_density: spec.adjusted_density.or(density).unwrap_or(0.0),
                    per_wh_impacts: impacts,
                })
            })
            .collect()
    }
}

/// A successfully parsed dataset with any warnings raised on the way.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed {
    pub dataset: Dataset,
    pub warnings: Vec<ParseDiagnostic>,
}

pub fn parse_str(text: &str) -> Result<Parsed, Vec<ParseDiagnostic>> {
    parse(text.as_bytes())
}

/// Parses a dataset. On failure the diagnostics hold at least one error.
pub fn parse(bytes: &[u8]) -> Result<Parsed, Vec<ParseDiagnostic>> {
    let mut r = Reader::default();
    let doc: Value = match serde_json::from_slice(bytes) {
        Ok(v) => v,
        Err(e) => {
            r.error(
                "",
                "SYNTAX",
                format!("{} at line {}, column {}", e, e.line(), e.column()),
            );
            return Err(r.diagnostics);
        }
    };
    let dataset = read_dataset(&mut r, &doc);
    match dataset {
        Some(dataset) if r.error_count() == 0 => Ok(Parsed {
            dataset,
            warnings: r.diagnostics,
        }),
        _ => {
            if r.error_count() == 0 {
                r.error("", "BAD_VALUE", "document could not be read");
            }
            let mut diagnostics = r.diagnostics;
            diagnostics.sort_by_key(|d| d.severity);
            Err(diagnostics)
        }
    }
}

const TOP_FIELDS: &[&str] = &[
    "format_version",
    "metadata",
    "flows",
    "processes",
    "methods",
    "cells",
    "packs",
    "scenarios",
    "comparisons",
    "evolutions",
];

fn read_dataset(r: &mut Reader, doc: &Value) -> Option<Dataset> {
    let top = r.object(doc, "")?;
    r.known_fields(top, "", TOP_FIELDS);
    let version = r.string(top, "format_version", "")?;
    if version != FORMAT_VERSION {
        r.error(
            "/format_version",
            "VERSION_UNSUPPORTED",
            format!("format version `{version}` is not supported (expected `{FORMAT_VERSION}`)"),
        );
        return None;
    }

    let metadata = read_metadata(r, top);
    let mut db = InventoryDatabase::new(metadata);
    let flow_paths = read_flows(r, top, &mut db);
    let process_paths = read_processes(r, top, &mut db);
    if r.error_count() == 0 {
        report_findings(r, &db, &flow_paths, &process_paths);
    }

    let methods = read_methods(r, top, &db);
    let cells = read_cells(r, top, &db);
    let packs = read_packs(r, top, &db);
    let scenarios = read_scenarios(r, top, &db, &cells);
    let comparisons = read_comparisons(r, top, &methods, &cells, &packs);
    let evolutions = read_evolutions(r, top, &cells);

    Some(Dataset {
        format_version: version,
        database: db,
        methods,
        cells,
        packs,
        scenarios,
        comparisons,
        evolutions,
    })
}

fn read_metadata(r: &mut Reader, top: &Object) -> DatabaseMetadata {
    let mut meta = DatabaseMetadata::default();
    let Some(v) = top.get("metadata") else {
        return meta;
    };
    let Some(m) = r.object(v, "/metadata") else {
        return meta;
    };
    r.known_fields(m, "/metadata", &["name", "version"]);
    meta.name = r.opt_string(m, "name", "/metadata").ok().flatten().unwrap_or_default();
    meta.version = r.opt_string(m, "version", "/metadata").ok().flatten().unwrap_or_default();
    meta
}

/// Flags a repeated id; returns true when `id` is new.
fn claim(r: &mut Reader, seen: &mut BTreeSet<String>, id: &str, path: &str, what: &str) -> bool {
    if seen.insert(id.to_string()) {
        true
    } else {
        r.error(join(path, "id"), "DUPLICATE_ID", format!("{what} `{id}` is defined twice"));
        false
    }
}

fn read_flows(r: &mut Reader, top: &Object, db: &mut InventoryDatabase) -> BTreeMap<String, String> {
    let mut paths = BTreeMap::new();
    let mut seen = BTreeSet::new();
    for (i, v) in r.array(top, "flows", "").iter().enumerate() {
        let path = format!("/flows/{i}");
        let Some(m) = r.object(v, &path) else { continue };
        r.known_fields(m, &path, &["id", "name", "kind", "unit", "compartment"]);
        let id = r.string(m, "id", &path);
        let name = r.string(m, "name", &path);
        let kind = r.string(m, "kind", &path).and_then(|k| match k.as_str() {
            "product" => Some(FlowKind::Product),
            "elementary" => Some(FlowKind::Elementary),
            other => {
                r.error(
                    join(&path, "kind"),
                    "BAD_VALUE",
                    format!("flow kind must be `product` or `elementary`, found `{other}`"),
                );
                None
            }
        });
        let unit = r
            .string(m, "unit", &path)
            .and_then(|s| r.unit(&s, &join(&path, "unit"), None));
        let Ok(compartment) = r.opt_string(m, "compartment", &path) else { continue };
        let (Some(id), Some(name), Some(kind), Some(unit)) = (id, name, kind, unit) else {
            continue;
        };
        if !claim(r, &mut seen, &id, &path, "flow") {
            continue;
        }
        paths.insert(id.clone(), path);
        db.add_flow(Flow {
            id,
            name,
            kind,
            unit,
            compartment,
        })
        .expect("ids checked above");
    }
    paths
}

fn read_exchange(
    r: &mut Reader,
    v: &Value,
    path: &str,
    db: &InventoryDatabase,
    reference: bool,
) -> Option<Exchange> {
    let m = r.object(v, path)?;
    let known: &[&str] = if reference {
        &["flow", "amount", "unit"]
    } else {
        &["flow", "direction", "amount", "unit"]
    };
    r.known_fields(m, path, known);
    let flow = r.string(m, "flow", path);
    let direction = if reference {
        Some(Direction::Output)
    } else {
        r.string(m, "direction", path).and_then(|d| match d.as_str() {
            "input" => Some(Direction::Input),
            "output" => Some(Direction::Output),
            other => {
                r.error(
                    join(path, "direction"),
                    "BAD_VALUE",
                    format!("direction must be `input` or `output`, found `{other}`"),
                );
                None
            }
        })
    };
    let amount = r.inline_amount(m, path, None);
    let flow = flow?;
    if db.flow(&flow).is_none() {
        r.error(join(path, "flow"), "DANGLING_REF", format!("undefined flow `{flow}`"));
        return None;
    }
    let (amount, unit) = amount?;
    Some(Exchange {
        flow,
        amount,
        unit,
        direction: direction?,
    })
}

fn read_processes(r: &mut Reader, top: &Object, db: &mut InventoryDatabase) -> BTreeMap<String, String> {
    let mut paths = BTreeMap::new();
    let mut seen = BTreeSet::new();
    let mut parsed = Vec::new();
    for (i, v) in r.array(top, "processes", "").iter().enumerate() {
        let path = format!("/processes/{i}");
        let Some(m) = r.object(v, &path) else { continue };
        r.known_fields(m, &path, &["id", "name", "reference_product", "exchanges"]);
        let id = r.string(m, "id", &path);
        let name = r.string(m, "name", &path);
        let reference = match m.get("reference_product") {
            Some(v) => read_exchange(r, v, &join(&path, "reference_product"), db, true),
            None => {
                r.error(
                    join(&path, "reference_product"),
                    "MISSING_FIELD",
                    "missing required field `reference_product`",
                );
                None
            }
        };
        let exchanges_path = join(&path, "exchanges");
        let mut exchanges = Vec::new();
        let mut complete = true;
        for (j, e) in r.array(m, "exchanges", &path).iter().enumerate() {
            match read_exchange(r, e, &join(&exchanges_path, j), db, false) {
                Some(ex) => exchanges.push(ex),
                None => complete = false,
            }
        }
        let (Some(id), Some(name), Some(reference)) = (id, name, reference) else {
            continue;
        };
        if !complete || !claim(r, &mut seen, &id, &path, "process") {
            continue;
        }
        paths.insert(id.clone(), path);
        parsed.push(Process {
            id,
            name,
            reference_product: reference,
            exchanges,
        });
    }
    for p in parsed {
        db.add_process(p).expect("ids checked above");
    }
    paths
}

fn report_findings(
    r: &mut Reader,
    db: &InventoryDatabase,
    flow_paths: &BTreeMap<String, String>,
    process_paths: &BTreeMap<String, String>,
) {
    for finding in validate_database(db).findings {
        let path = match (&finding.process, finding.exchange) {
            (Some(p), Some(0)) => join(&process_paths[p], "reference_product"),
            (Some(p), Some(k)) => join(&join(&process_paths[p], "exchanges"), k - 1),
            (Some(p), None) => process_paths[p].clone(),
            (None, _) => finding
                .flow
                .as_ref()
                .and_then(|f| flow_paths.get(f).cloned())
                .unwrap_or_default(),
        };
        let code = match finding.code {
            FindingCode::DanglingFlow => "DANGLING_REF",
            other => other.as_str(),
        };
        r.error(path, code, finding.message);
    }
}

fn read_methods(r: &mut Reader, top: &Object, db: &InventoryDatabase) -> Vec<ImpactMethod> {
    let mut methods = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, v) in r.array(top, "methods", "").iter().enumerate() {
        let path = format!("/methods/{i}");
        let Some(m) = r.object(v, &path) else { continue };
        r.known_fields(m, &path, &["id", "name", "categories"]);
        let id = r.string(m, "id", &path);
        let name = r.string(m, "name", &path);
        let cats_path = join(&path, "categories");
        let mut categories = Vec::new();
        for (j, c) in r.array(m, "categories", &path).iter().enumerate() {
            let cp = join(&cats_path, j);
            let Some(cm) = r.object(c, &cp) else { continue };
            r.known_fields(cm, &cp, &["id", "name", "unit", "factors"]);
            let cid = r.string(cm, "id", &cp);
            let cname = r.string(cm, "name", &cp);
            let unit = r.string(cm, "unit", &cp);
            let factors = r.number_map(cm, "factors", &cp);
            for (flow, _, fp) in &factors {
                if db.flow(flow).is_none() {
                    r.warn(fp.clone(), "UNKNOWN_FACTOR_FLOW", format!("no flow `{flow}` in the database"));
                }
            }
            let (Some(cid), Some(cname), Some(unit)) = (cid, cname, unit) else { continue };
            let mut category = ImpactCategory::new(cid, cname, unit);
            for (flow, x, _) in factors {
                category = category.with_factor(flow, x);
            }
            categories.push(category);
        }
        let (Some(id), Some(name)) = (id, name) else { continue };
        if !claim(r, &mut seen, &id, &path, "method") {
            continue;
        }
        match ImpactMethod::new(id, name, categories) {
            Ok(method) => methods.push(method),
            Err(e) => r.error(cats_path, e.code(), e.to_string()),
        }
    }
    methods
}

/// Reports a material flow that is not a product or has no provider.
fn check_material(r: &mut Reader, db: &InventoryDatabase, flow: &str, path: &str) -> bool {
    match db.flow(flow) {
        None => {
            r.error(path, "DANGLING_REF", format!("undefined flow `{flow}`"));
            false
        }
        Some(f) if f.kind != FlowKind::Product => {
            r.error(path, "BAD_VALUE", format!("`{flow}` is not a product flow"));
            false
        }
        Some(_) if db.provider_of(flow).is_none() => {
            r.error(path, "MISSING_PROVIDER", format!("no process supplies `{flow}`"));
            false
        }
        Some(_) => true,
    }
}

fn read_role(r: &mut Reader, s: &str, path: &str) -> Option<Role> {
    match s.parse::<Role>() {
        Ok(role) => Some(role),
        Err(e) => {
            r.error(path, "BAD_VALUE", e.to_string());
            None
        }
    }
}

fn read_cells(r: &mut Reader, top: &Object, db: &InventoryDatabase) -> Vec<CellDesign> {
    let mut cells = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, v) in r.array(top, "cells", "").iter().enumerate() {
        let path = format!("/cells/{i}");
        let Some(m) = r.object(v, &path) else { continue };
        r.known_fields(m, &path, &["name", "cell_energy", "components"]);
        let name = r.string(m, "name", &path);
        let energy = r.amount_in(m, "cell_energy", &path, "Wh");
        let comps_path = join(&path, "components");
        let mut components = Vec::new();
        let mut complete = true;
        for (j, c) in r.array(m, "components", &path).iter().enumerate() {
            let cp = join(&comps_path, j);
            let Some(cm) = r.object(c, &cp) else {
                complete = false;
                continue;
            };
            r.known_fields(cm, &cp, &["role", "material", "mass"]);
            let role = r.string(cm, "role", &cp).and_then(|s| read_role(r, &s, &join(&cp, "role")));
            let material = r.string(cm, "material", &cp);
            let material = material.filter(|f| check_material(r, db, f, &join(&cp, "material")));
            let mass = r.amount_in(cm, "mass", &cp, "mg");
            match (role, material, mass) {
                (Some(role), Some(material), Some(mass)) => components.push(CellComponent::new(role, material, mass)),
                _ => complete = false,
            }
        }
        let (Some(name), Some(energy)) = (name, energy) else { continue };
        if !complete {
            continue;
        }
        if !seen.insert(name.clone()) {
            r.error(join(&path, "name"), "DUPLICATE_ID", format!("cell `{name}` is defined twice"));
            continue;
        }
        match CellDesign::new(name, components, energy) {
            Ok(cell) => cells.push(cell),
            Err(e) => r.error(path, e.code(), e.to_string()),
        }
    }
    cells
}

fn read_packs(r: &mut Reader, top: &Object, db: &InventoryDatabase) -> Vec<PackDesign> {
    let mut packs = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, v) in r.array(top, "packs", "").iter().enumerate() {
        let path = format!("/packs/{i}");
        let Some(m) = r.object(v, &path) else { continue };
        r.known_fields(
            m,
            &path,
            &[
                "id",
                "cell_share",
                "housing_share",
                "bms_share",
                "pack_mass",
                "housing_material",
                "bms_material",
                "cell_manufacturing",
            ],
        );
        let id = r.string(m, "id", &path);
        let cell_share = r.number(m, "cell_share", &path);
        let housing_share = r.number(m, "housing_share", &path);
        let bms_share = r.number(m, "bms_share", &path);
        let pack_mass = r.amount_in(m, "pack_mass", &path, "kg");
        let material = |r: &mut Reader, key: &str| {
            r.string(m, key, &path)
                .filter(|f| check_material(r, db, f, &join(&path, key)))
        };
        let housing = material(r, "housing_material");
        let bms = material(r, "bms_material");
        let manufacturing = match r.opt_string(m, "cell_manufacturing", &path) {
            Ok(Some(f)) if !check_material(r, db, &f, &join(&path, "cell_manufacturing")) => continue,
            Ok(f) => f,
            Err(()) => continue,
        };
        let (Some(id), Some(cell_share), Some(housing_share), Some(bms_share), Some(pack_mass), Some(housing), Some(bms)) =
            (id, cell_share, housing_share, bms_share, pack_mass, housing, bms)
        else {
            continue;
        };
        if !claim(r, &mut seen, &id, &path, "pack") {
            continue;
        }
        let pack = PackDesign {
            id,
            cell_share,
            housing_share,
            bms_share,
            pack_mass_kg: pack_mass,
            housing_material: housing,
            bms_material: bms,
            cell_manufacturing: manufacturing,
        };
        match pack.validate() {
            Ok(()) => packs.push(pack),
            Err(e) => r.error(path, e.code(), e.to_string()),
        }
    }
    packs
}

fn read_override(
    r: &mut Reader,
    v: &Value,
    path: &str,
    db: &InventoryDatabase,
    cells: &[CellDesign],
) -> Option<Override> {
    let m = r.object(v, path)?;
    let kind = r.string(m, "kind", path)?;
    let flow_ref = |r: &mut Reader, key: &str| {
        let flow = r.string(m, key, path)?;
        if db.flow(&flow).is_none() {
            r.error(join(path, key), "DANGLING_REF", format!("undefined flow `{flow}`"));
            return None;
        }
        Some(flow)
    };
    let process_ref = |r: &mut Reader, key: &str| {
        let id = r.string(m, key, path)?;
        if db.process(&id).is_none() {
            r.error(join(path, key), "DANGLING_REF", format!("undefined process `{id}`"));
            return None;
        }
        Some(id)
    };
    match kind.as_str() {
        "replace_provider" => {
            r.known_fields(m, path, &["kind", "flow", "new_process"]);
            let flow = flow_ref(r, "flow");
            let new_process = process_ref(r, "new_process");
            Some(Override::ReplaceProvider {
                flow: flow?,
                new_process: new_process?,
            })
        }
        "scale_exchange" => {
            r.known_fields(m, path, &["kind", "process", "flow", "factor"]);
            let process = process_ref(r, "process");
            let flow = flow_ref(r, "flow");
            let factor = r.number(m, "factor", path)?;
            if factor < 0.0 {
                r.error(join(path, "factor"), "BAD_VALUE", format!("scale factor {factor} is negative"));
                return None;
            }
            Some(Override::ScaleExchange {
                process: process?,
                flow: flow?,
                factor,
            })
        }
        "set_component_mass" => {
            r.known_fields(m, path, &["kind", "cell", "role", "mass"]);
            let cell = r.string(m, "cell", path);
            let role = r.string(m, "role", path).and_then(|s| read_role(r, &s, &join(path, "role")));
            let mass = r.amount_in(m, "mass", path, "mg");
            let cell = cell?;
            if !cells.iter().any(|c| c.name() == cell) {
                r.error(join(path, "cell"), "DANGLING_REF", format!("undefined cell `{cell}`"));
                return None;
            }
            let mass_mg = mass?;
            if mass_mg < 0.0 {
                r.error(join(path, "mass"), "BAD_VALUE", format!("mass {mass_mg} mg is negative"));
                return None;
            }
            Some(Override::SetComponentMass {
                cell,
                role: role?,
                mass_mg,
            })
        }
        other => {
            r.error(join(path, "kind"), "BAD_VALUE", format!("unknown override kind `{other}`"));
            None
        }
    }
}

fn read_scenarios(r: &mut Reader, top: &Object, db: &InventoryDatabase, cells: &[CellDesign]) -> Vec<Scenario> {
    let mut scenarios = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, v) in r.array(top, "scenarios", "").iter().enumerate() {
        let path = format!("/scenarios/{i}");
        let Some(m) = r.object(v, &path) else { continue };
        r.known_fields(m, &path, &["id", "overrides"]);
        let id = r.string(m, "id", &path);
        let ov_path = join(&path, "overrides");
        let items = r.array(m, "overrides", &path);
        let overrides: Vec<Option<Override>> = items
            .iter()
            .enumerate()
            .map(|(j, o)| read_override(r, o, &join(&ov_path, j), db, cells))
            .collect();
        let Some(id) = id else { continue };
        let Some(overrides) = overrides.into_iter().collect::<Option<Vec<_>>>() else { continue };
        if claim(r, &mut seen, &id, &path, "scenario") {
            scenarios.push(Scenario { id, overrides });
        }
    }
    scenarios
}

fn read_comparisons(
    r: &mut Reader,
    top: &Object,
    methods: &[ImpactMethod],
    cells: &[CellDesign],
    packs: &[PackDesign],
) -> Vec<ComparisonSpec> {
    let mut specs = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, v) in r.array(top, "comparisons", "").iter().enumerate() {
        let path = format!("/comparisons/{i}");
        let Some(m) = r.object(v, &path) else { continue };
        r.known_fields(
            m,
            &path,
            &["name", "original_density", "adjusted_density", "impacts", "cell", "pack"],
        );
        let name = r.string(m, "name", &path);
        let Ok(original) = r.opt_number(m, "original_density", &path) else { continue };
        let Ok(adjusted) = r.opt_number(m, "adjusted_density", &path) else { continue };
        let mut densities_ok = true;
        for (key, d) in [("original_density", original), ("adjusted_density", adjusted)] {
            if let Some(d) = d.filter(|d| *d <= 0.0) {
                r.error(join(&path, key), "BAD_VALUE", format!("density {d} Wh/kg must be positive"));
                densities_ok = false;
            }
        }

        let source = if let Some(iv) = m.get("impacts") {
            if m.contains_key("cell") || m.contains_key("pack") {
                r.error(
                    path.clone(),
                    "BAD_VALUE",
                    "an entry has either reported `impacts` or a modeled `cell` and `pack`",
                );
                continue;
            }
            read_reported(r, iv, &join(&path, "impacts"), methods)
        } else {
            let cell = r.string(m, "cell", &path);
            let pack = r.string(m, "pack", &path);
            let cell = cell.filter(|c| {
                let ok = cells.iter().any(|x| x.name() == c);
                if !ok {
                    r.error(join(&path, "cell"), "DANGLING_REF", format!("undefined cell `{c}`"));
                }
                ok
            });
            let pack = pack.filter(|p| {
                let ok = packs.iter().any(|x| x.id == *p);
                if !ok {
                    r.error(join(&path, "pack"), "DANGLING_REF", format!("undefined pack `{p}`"));
                }
                ok
            });
            match (cell, pack) {
                (Some(cell), Some(pack)) => Some(ComparisonSource::Modeled { cell, pack }),
                _ => None,
            }
        };
        if let Some(ComparisonSource::Reported(_)) = &source {
            for (key, d) in [("original_density", original), ("adjusted_density", adjusted)] {
                if d.is_none() {
                    r.error(join(&path, key), "MISSING_FIELD", format!("reported entries need `{key}`"));
                    densities_ok = false;
                }
            }
        }
        let (Some(name), Some(source)) = (name, source) else { continue };
        if !densities_ok {
            continue;
        }
        if !seen.insert(name.clone()) {
            r.error(join(&path, "name"), "DUPLICATE_ID", format!("comparison `{name}` is defined twice"));
            continue;
        }
        specs.push(ComparisonSpec {
            name,
            original_density: original,
            adjusted_density: adjusted,
            source,
        });
    }
    specs
}

fn read_reported(r: &mut Reader, v: &Value, path: &str, methods: &[ImpactMethod]) -> Option<ComparisonSource> {
    let m = r.object(v, path)?;
    r.known_fields(m, path, &["method", "values"]);
    let method_id = r.string(m, "method", path)?;
    let Some(method) = methods.iter().find(|x| x.id == method_id) else {
        r.error(join(path, "method"), "DANGLING_REF", format!("undefined method `{method_id}`"));
        return None;
    };
    if !m.contains_key("values") {
        r.error(join(path, "values"), "MISSING_FIELD", "missing required field `values`");
        return None;
    }
    let values = r.number_map(m, "values", path);
    let mut per_category = BTreeMap::new();
    for (cat, x, vp) in values {
        if method.category(&cat).is_none() {
            r.error(vp, "DANGLING_REF", format!("method `{method_id}` has no category `{cat}`"));
            return None;
        }
        per_category.insert(cat, x);
    }
    for cat in method.category_ids() {
        if !per_category.contains_key(cat) {
            r.error(
                join(&join(path, "values"), cat),
                "MISSING_FIELD",
                format!("no value for category `{cat}`"),
            );
            return None;
        }
    }
    Some(ComparisonSource::Reported(ImpactResult {
        method: method_id,
        per_category,
        coverage: BTreeMap::new(),
    }))
}

fn read_evolutions(r: &mut Reader, top: &Object, cells: &[CellDesign]) -> Vec<EvolutionDef> {
    let mut evolutions = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, v) in r.array(top, "evolutions", "").iter().enumerate() {
        let path = format!("/evolutions/{i}");
        let Some(m) = r.object(v, &path) else { continue };
        r.known_fields(
            m,
            &path,
            &["id", "base", "name", "fixed_roles", "target_shares", "preserved_share_roles"],
        );
        let id = r.string(m, "id", &path);
        let base = r.string(m, "base", &path);
        let name = r.string(m, "name", &path);
        let mut complete = true;
        let mut roles = |r: &mut Reader, key: &str| -> BTreeSet<Role> {
            r.string_array(m, key, &path)
                .into_iter()
                .filter_map(|(s, p)| {
                    let role = read_role(r, &s, &p);
                    complete &= role.is_some();
                    role
                })
                .collect()
        };
        let fixed_roles = roles(r, "fixed_roles");
        let preserved_share_roles = roles(r, "preserved_share_roles");
        let mut target_shares = BTreeMap::new();
        for (s, x, p) in r.number_map(m, "target_shares", &path) {
            match read_role(r, &s, &p) {
                Some(role) => {
                    target_shares.insert(role, x);
                }
                None => complete = false,
            }
        }
        let (Some(id), Some(base), Some(name)) = (id, base, name) else { continue };
        if !complete || !claim(r, &mut seen, &id, &path, "evolution") {
            continue;
        }
        let Some(base_cell) = cells.iter().find(|c| c.name() == base) else {
            r.error(join(&path, "base"), "DANGLING_REF", format!("undefined cell `{base}`"));
            continue;
        };
        let spec = EvolutionSpec {
            fixed_roles,
            target_shares,
            preserved_share_roles,
        };
        if let Err(e) = derive_evolution(base_cell, &spec) {
            r.error(path, e.code(), e.to_string());
            continue;
        }
        evolutions.push(EvolutionDef { id, base, name, spec });
    }
    evolutions
}

#[cfg(test)]
mod tests;
