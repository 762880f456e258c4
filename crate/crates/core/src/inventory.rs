//! Flows, processes and the inventory database.
//!
//! A database is built once and then only read. Scenario overrides work on
//! clones, never on a loaded database in place.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::units::Unit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FlowKind {
    Product,
    Elementary,
}

impl FlowKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FlowKind::Product => "product",
            FlowKind::Elementary => "elementary",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Input,
    Output,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Input => "input",
            Direction::Output => "output",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Flow {
    pub id: String,
    pub name: String,
    pub kind: FlowKind,
    /// Reference unit of the flow; exchanges may use any unit of the same dimension.
    pub unit: Unit,
    /// Receiving or source compartment for elementary flows ("air", "resource", ...).
    pub compartment: Option<String>,
}

impl Flow {
    pub fn product(id: impl Into<String>, name: impl Into<String>, unit: Unit) -> Self {
        Flow {
            id: id.into(),
            name: name.into(),
            kind: FlowKind::Product,
            unit,
            compartment: None,
        }
    }

    pub fn elementary(
        id: impl Into<String>,
        name: impl Into<String>,
        unit: Unit,
        compartment: impl Into<String>,
    ) -> Self {
        Flow {
            id: id.into(),
            name: name.into(),
            kind: FlowKind::Elementary,
            unit,
            compartment: Some(compartment.into()),
        }
    }
}

/// An amount of some flow entering or leaving a process.
#[derive(Debug, Clone, PartialEq)]
pub struct Exchange {
    pub flow: String,
    pub amount: f64,
    pub unit: Unit,
    pub direction: Direction,
}

impl Exchange {
    pub fn input(flow: impl Into<String>, amount: f64, unit: Unit) -> Self {
        Exchange {
            flow: flow.into(),
            amount,
            unit,
            direction: Direction::Input,
        }
    }

    pub fn output(flow: impl Into<String>, amount: f64, unit: Unit) -> Self {
        Exchange {
            flow: flow.into(),
            amount,
            unit,
            direction: Direction::Output,
        }
    }

    /// Amount in the base unit of the exchange's dimension.
    pub fn base_amount(&self) -> f64 {
        self.unit.base_amount(self.amount)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Process {
    pub id: String,
    pub name: String,
    pub reference_product: Exchange,
    /// Everything except the reference product.
    pub exchanges: Vec<Exchange>,
}

impl Process {
    pub fn new(id: impl Into<String>, name: impl Into<String>, reference_product: Exchange) -> Self {
        Process {
            id: id.into(),
            name: name.into(),
            reference_product,
            exchanges: Vec::new(),
        }
    }

    pub fn with_exchange(mut self, exchange: Exchange) -> Self {
        self.exchanges.push(exchange);
        self
    }

    pub fn all_exchanges(&self) -> impl Iterator<Item = &Exchange> {
        std::iter::once(&self.reference_product).chain(self.exchanges.iter())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InventoryError {
    #[error("duplicate flow id `{0}`")]
    DuplicateFlow(String),
    #[error("duplicate process id `{0}`")]
    DuplicateProcess(String),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatabaseMetadata {
    pub name: String,
    pub version: String,
}

/// The process-flow graph. Flows and processes are keyed by id so iteration
/// order is always sorted by id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InventoryDatabase {
    pub metadata: DatabaseMetadata,
    flows: BTreeMap<String, Flow>,
    processes: BTreeMap<String, Process>,
}

impl InventoryDatabase {
    pub fn new(metadata: DatabaseMetadata) -> Self {
        InventoryDatabase {
            metadata,
            ..Default::default()
        }
    }

    pub fn add_flow(&mut self, flow: Flow) -> Result<(), InventoryError> {
        if self.flows.contains_key(&flow.id) {
            return Err(InventoryError::DuplicateFlow(flow.id));
        }
        self.flows.insert(flow.id.clone(), flow);
        Ok(())
    }

    pub fn add_process(&mut self, process: Process) -> Result<(), InventoryError> {
        if self.processes.contains_key(&process.id) {
            return Err(InventoryError::DuplicateProcess(process.id));
        }
        self.processes.insert(process.id.clone(), process);
        Ok(())
    }

    pub fn flow(&self, id: &str) -> Option<&Flow> {
        self.flows.get(id)
    }

    pub fn process(&self, id: &str) -> Option<&Process> {
        self.processes.get(id)
    }

    pub(crate) fn process_mut(&mut self, id: &str) -> Option<&mut Process> {
        self.processes.get_mut(id)
    }

    pub(crate) fn processes_mut(&mut self) -> impl Iterator<Item = &mut Process> {
        self.processes.values_mut()
    }

    pub fn flows(&self) -> impl Iterator<Item = &Flow> {
        self.flows.values()
    }

    pub fn processes(&self) -> impl Iterator<Item = &Process> {
        self.processes.values()
    }

    pub fn flow_count(&self) -> usize {
        self.flows.len()
    }

    pub fn process_count(&self) -> usize {
        self.processes.len()
    }

    pub fn elementary_flows(&self) -> impl Iterator<Item = &Flow> {
        self.flows.values().filter(|f| f.kind == FlowKind::Elementary)
    }

    /// The process whose reference product is `flow_id`. When several
    /// processes claim the flow (a validation error) the first by id wins.
    pub fn provider_of(&self, flow_id: &str) -> Option<&Process> {
        self.processes
            .values()
            .find(|p| p.reference_product.flow == flow_id)
    }

    /// Map from product flow id to its provider, first by id on duplicates.
    pub fn provider_index(&self) -> BTreeMap<&str, &Process> {
        let mut index = BTreeMap::new();
        for p in self.processes.values() {
            index.entry(p.reference_product.flow.as_str()).or_insert(p);
        }
        index
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FindingCode {
    MissingProvider,
    DuplicateProvider,
    UnitMismatch,
    DanglingFlow,
    NonpositiveReference,
    NegativeAmount,
    NonfiniteAmount,
    BadReference,
    CoProduct,
    Compartment,
}

impl FindingCode {
    pub fn as_str(self) -> &'static str {
        match self {
            FindingCode::MissingProvider => "MISSING_PROVIDER",
            FindingCode::DuplicateProvider => "DUPLICATE_PROVIDER",
            FindingCode::UnitMismatch => "UNIT_MISMATCH",
            FindingCode::DanglingFlow => "DANGLING_FLOW",
            FindingCode::NonpositiveReference => "NONPOSITIVE_REFERENCE",
            FindingCode::NegativeAmount => "NEGATIVE_AMOUNT",
            FindingCode::NonfiniteAmount => "NONFINITE_AMOUNT",
            FindingCode::BadReference => "BAD_REFERENCE",
            FindingCode::CoProduct => "CO_PRODUCT",
            FindingCode::Compartment => "COMPARTMENT",
        }
    }
}

impl fmt::Display for FindingCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Finding {
    pub code: FindingCode,
    pub process: Option<String>,
    pub flow: Option<String>,
    /// Position of the offending exchange within the process, 0 being the
    /// reference product and `i + 1` the i-th entry of `exchanges`.
    pub exchange: Option<usize>,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn count(&self, code: FindingCode) -> usize {
        self.findings.iter().filter(|f| f.code == code).count()
    }
}

/// Checks every structural invariant of the database. Problems are
/// collected, never raised; the report is sorted so the result does not
/// depend on insertion order.
pub fn validate_database(db: &InventoryDatabase) -> ValidationReport {
    let mut findings = Vec::new();
    let mut providers: BTreeMap<&str, Vec<&str>> = BTreeMap::new();

    for flow in db.flows() {
        let bad = match flow.kind {
            FlowKind::Product => flow.compartment.is_some(),
            FlowKind::Elementary => flow.compartment.as_deref().map_or(true, str::is_empty),
        };
        if bad {
            findings.push(Finding {
                code: FindingCode::Compartment,
                process: None,
                flow: Some(flow.id.clone()),
                exchange: None,
                message: format!(
                    "{} flow `{}` {}",
                    flow.kind.as_str(),
                    flow.id,
                    if flow.kind == FlowKind::Product {
                        "must not carry a compartment"
                    } else {
                        "needs a compartment"
                    }
                ),
            });
        }
    }

    for process in db.processes() {
        for (position, exchange) in process.all_exchanges().enumerate() {
            let mut push = |code, message: String| {
                findings.push(Finding {
                    code,
                    process: Some(process.id.clone()),
                    flow: Some(exchange.flow.clone()),
                    exchange: Some(position),
                    message,
                })
            };
            let is_reference = position == 0;

            if !exchange.amount.is_finite() {
                push(
                    FindingCode::NonfiniteAmount,
                    format!("process `{}` has a non-finite amount of `{}`", process.id, exchange.flow),
                );
            } else if is_reference && exchange.amount <= 0.0 {
                push(
                    FindingCode::NonpositiveReference,
                    format!(
                        "reference product of `{}` has amount {} (must be > 0)",
                        process.id, exchange.amount
                    ),
                );
            } else if exchange.amount < 0.0 {
                push(
                    FindingCode::NegativeAmount,
                    format!("process `{}` has negative amount {} of `{}`", process.id, exchange.amount, exchange.flow),
                );
            }

            let Some(flow) = db.flow(&exchange.flow) else {
                push(
                    FindingCode::DanglingFlow,
                    format!("process `{}` references unknown flow `{}`", process.id, exchange.flow),
                );
                continue;
            };

            if flow.unit.dimension() != exchange.unit.dimension() {
                push(
                    FindingCode::UnitMismatch,
                    format!(
                        "process `{}` gives `{}` in {} ({}) but the flow is measured in {} ({})",
                        process.id,
                        flow.id,
                        exchange.unit,
                        exchange.unit.dimension(),
                        flow.unit,
                        flow.unit.dimension()
                    ),
                );
            }

            if is_reference {
                if flow.kind != FlowKind::Product || exchange.direction != Direction::Output {
                    push(
                        FindingCode::BadReference,
                        format!(
                            "reference product of `{}` must be a product output, got {} {}",
                            process.id,
                            flow.kind.as_str(),
                            exchange.direction.as_str()
                        ),
                    );
                } else {
                    providers.entry(flow.id.as_str()).or_default().push(process.id.as_str());
                }
            } else if flow.kind == FlowKind::Product && exchange.direction == Direction::Output {
                push(
                    FindingCode::CoProduct,
                    format!("process `{}` has a second product output `{}`", process.id, flow.id),
                );
            }
        }
    }

    for (flow, procs) in &providers {
        if procs.len() > 1 {
            findings.push(Finding {
                code: FindingCode::DuplicateProvider,
                process: Some(procs[1..].join(",")),
                flow: Some(flow.to_string()),
                exchange: None,
                message: format!("flow `{}` is produced by several processes: {}", flow, procs.join(", ")),
            });
        }
    }

    for process in db.processes() {
        for (i, exchange) in process.exchanges.iter().enumerate() {
            if exchange.direction != Direction::Input {
                continue;
            }
            let is_product = db.flow(&exchange.flow).is_some_and(|f| f.kind == FlowKind::Product);
            if is_product && !providers.contains_key(exchange.flow.as_str()) {
                findings.push(Finding {
                    code: FindingCode::MissingProvider,
                    process: Some(process.id.clone()),
                    flow: Some(exchange.flow.clone()),
                    exchange: Some(i + 1),
                    message: format!(
                        "process `{}` consumes `{}` but no process produces it",
                        process.id, exchange.flow
                    ),
                });
            }
        }
    }

    findings.sort();
    findings.dedup();
    ValidationReport { findings }
}

/// Product flows that are consumed somewhere, for diagnostics and tooling.
pub fn consumed_products(db: &InventoryDatabase) -> BTreeSet<&str> {
    db.processes()
        .flat_map(|p| p.exchanges.iter())
        .filter(|e| e.direction == Direction::Input)
        .filter(|e| db.flow(&e.flow).is_some_and(|f| f.kind == FlowKind::Product))
        .map(|e| e.flow.as_str())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u(s: &str) -> Unit {
        Unit::lookup(s).unwrap()
    }

    fn chain() -> InventoryDatabase {
        let mut db = InventoryDatabase::default();
        db.add_flow(Flow::product("electricity", "electricity", u("kWh"))).unwrap();
        db.add_flow(Flow::product("foil", "Mg foil", u("kg"))).unwrap();
        db.add_flow(Flow::elementary("co2", "carbon dioxide", u("kg"), "air")).unwrap();
        db.add_process(
            Process::new("P", "power", Exchange::output("electricity", 1.0, u("kWh")))
                .with_exchange(Exchange::output("co2", 0.5, u("kg"))),
        )
        .unwrap();
        db.add_process(
            Process::new("Q", "foil rolling", Exchange::output("foil", 1.0, u("kg")))
                .with_exchange(Exchange::input("electricity", 2.0, u("kWh")))
                .with_exchange(Exchange::output("co2", 0.1, u("kg"))),
        )
        .unwrap();
        db
    }

    #[test]
    fn well_formed_database_is_clean() {
        assert!(validate_database(&chain()).is_clean());
    }

    #[test]
    fn missing_provider_is_reported() {
        let mut db = chain();
        db.add_flow(Flow::product("sulfur", "sulfur", u("kg"))).unwrap();
        db.add_process(
            Process::new("R", "cathode", Exchange::output("cathode", 1.0, u("kg")))
                .with_exchange(Exchange::input("sulfur", 0.5, u("kg"))),
        )
        .unwrap();
        db.add_flow(Flow::product("cathode", "cathode", u("kg"))).unwrap();
        let report = validate_database(&db);
        assert_eq!(report.findings.len(), 1, "{:?}", report);
        let f = &report.findings[0];
        assert_eq!(f.code, FindingCode::MissingProvider);
        assert_eq!(f.process.as_deref(), Some("R"));
        assert_eq!(f.flow.as_deref(), Some("sulfur"));
    }

    #[test]
    fn duplicate_provider_is_reported() {
        let mut db = chain();
        db.add_process(Process::new("P2", "more power", Exchange::output("electricity", 1.0, u("kWh"))))
            .unwrap();
        let report = validate_database(&db);
        assert_eq!(report.findings.len(), 1);
        assert_eq!(report.findings[0].code, FindingCode::DuplicateProvider);
        assert_eq!(report.findings[0].flow.as_deref(), Some("electricity"));
    }

    #[test]
    fn unit_and_amount_problems() {
        let mut db = chain();
        db.add_flow(Flow::product("x", "x", u("kg"))).unwrap();
        db.add_process(
            Process::new("X", "x", Exchange::output("x", 0.0, u("kg")))
                .with_exchange(Exchange::input("electricity", 1.0, u("kg")))
                .with_exchange(Exchange::output("co2", -1.0, u("kg")))
                .with_exchange(Exchange::output("ghost", 1.0, u("kg"))),
        )
        .unwrap();
        let report = validate_database(&db);
        assert_eq!(report.count(FindingCode::NonpositiveReference), 1);
        assert_eq!(report.count(FindingCode::UnitMismatch), 1);
        assert_eq!(report.count(FindingCode::NegativeAmount), 1);
        assert_eq!(report.count(FindingCode::DanglingFlow), 1);
    }

    #[test]
    fn compartment_rules() {
        let mut db = chain();
        let mut bad = Flow::elementary("ch4", "methane", u("kg"), "air");
        bad.compartment = None;
        db.add_flow(bad).unwrap();
        let mut bad = Flow::product("steel", "steel", u("kg"));
        bad.compartment = Some("air".into());
        db.add_flow(bad).unwrap();
        assert_eq!(validate_database(&db).count(FindingCode::Compartment), 2);
    }

    #[test]
    fn duplicate_ids_are_refused_on_insert() {
        let mut db = chain();
        assert!(matches!(
            db.add_flow(Flow::product("foil", "again", u("kg"))),
            Err(InventoryError::DuplicateFlow(_))
        ));
    }

    #[test]
    fn validation_is_idempotent() {
        let mut db = chain();
        db.add_process(Process::new("P2", "more power", Exchange::output("electricity", 1.0, u("kWh"))))
            .unwrap();
        assert_eq!(validate_database(&db), validate_database(&db));
    }
}
