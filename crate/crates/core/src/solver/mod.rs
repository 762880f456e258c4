//! Life-cycle inventory: technosphere/biosphere assembly and the scaling solve.
//!
//! Rows of the technosphere matrix are indexed by the reference product of
//! the process in the same position, so the matrix is square and its
//! diagonal holds each process's net output of its own product. All entries
//! are in base units (kg, Wh, ...).

mod linear;
mod traverse;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::inventory::{validate_database, Direction, FlowKind, InventoryDatabase, ValidationReport};

pub use linear::{inf_norm, BlockFactorization, LinearSolveError, SparseMatrix, REFINE_THRESHOLD, REJECT_THRESHOLD};
pub use traverse::traverse_oracle;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("database has {} validation finding(s), first: {}", .0.findings.len(), .0.findings.first().map(|f| f.to_string()).unwrap_or_default())]
    InvalidDatabase(ValidationReport),
    #[error("demanded flow `{0}` is not the reference product of any process")]
    UnknownDemandFlow(String),
    #[error("technosphere matrix is numerically singular around {processes:?} (residual {residual:e})")]
    SingularSystem { processes: Vec<String>, residual: f64 },
    #[error("invalid demand: {0}")]
    InvalidDemand(String),
}

impl SolveError {
    pub fn code(&self) -> &'static str {
        match self {
            SolveError::InvalidDatabase(_) => "INVALID_DATABASE",
            SolveError::UnknownDemandFlow(_) => "UNKNOWN_DEMAND_FLOW",
            SolveError::SingularSystem { .. } => "SINGULAR_SYSTEM",
            SolveError::InvalidDemand(_) => "INVALID_DEMAND",
        }
    }
}

/// Final demand on product flows, in base units.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DemandVector {
    entries: BTreeMap<String, f64>,
}

impl DemandVector {
    /// Requires finite amounts and at least one nonzero entry.
    pub fn new(entries: impl IntoIterator<Item = (String, f64)>) -> Result<Self, SolveError> {
        let mut map = BTreeMap::new();
        for (flow, amount) in entries {
            if !amount.is_finite() {
                return Err(SolveError::InvalidDemand(format!("non-finite amount for `{flow}`")));
            }
            *map.entry(flow).or_insert(0.0) += amount;
        }
        if map.values().all(|v| *v == 0.0) {
            return Err(SolveError::InvalidDemand("demand has no nonzero entry".into()));
        }
        Ok(DemandVector { entries: map })
    }

    pub fn single(flow: impl Into<String>, amount: f64) -> Result<Self, SolveError> {
        Self::new([(flow.into(), amount)])
    }

    pub fn get(&self, flow: &str) -> f64 {
        self.entries.get(flow).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `alpha·self + beta·other`, keeping zero entries.
    pub fn combine(&self, alpha: f64, other: &DemandVector, beta: f64) -> DemandVector {
        let mut entries: BTreeMap<String, f64> = self.entries.iter().map(|(k, v)| (k.clone(), alpha * v)).collect();
        for (k, v) in &other.entries {
            *entries.entry(k.clone()).or_insert(0.0) += beta * v;
        }
        DemandVector { entries }
    }
}

/// Process scaling factors solving `A·s = f`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScalingVector {
    pub entries: BTreeMap<String, f64>,
}

impl ScalingVector {
    pub fn get(&self, process: &str) -> f64 {
        self.entries.get(process).copied().unwrap_or(0.0)
    }
}

/// Aggregated elementary flows, in base units.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InventoryVector {
    pub entries: BTreeMap<String, f64>,
}

impl InventoryVector {
    pub fn get(&self, flow: &str) -> f64 {
        self.entries.get(flow).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn add(&self, other: &InventoryVector) -> InventoryVector {
        let mut entries = self.entries.clone();
        for (k, v) in &other.entries {
            *entries.entry(k.clone()).or_insert(0.0) += v;
        }
        InventoryVector { entries }
    }

    pub fn scaled(&self, factor: f64) -> InventoryVector {
        InventoryVector {
            entries: self.entries.iter().map(|(k, v)| (k.clone(), v * factor)).collect(),
        }
    }

    /// Largest relative deviation from `other` over the union of flows,
    /// normalised by the larger of the two inventories' max-norms.
    pub fn max_relative_difference(&self, other: &InventoryVector) -> f64 {
        let scale = self
            .entries
            .values()
            .chain(other.entries.values())
            .fold(0.0_f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        self.entries
            .keys()
            .chain(other.entries.keys())
            .map(|k| (self.get(k) - other.get(k)).abs() / scale)
            .fold(0.0, f64::max)
    }
}

/// Matrix form of a validated inventory database.
#[derive(Debug, Clone, PartialEq)]
pub struct TechnosphereSystem {
    process_order: Vec<String>,
    product_order: Vec<String>,
    flow_order: Vec<String>,
    technosphere: SparseMatrix,
    biosphere: SparseMatrix,
    product_index: BTreeMap<String, usize>,
}

impl TechnosphereSystem {
    pub fn process_order(&self) -> &[String] {
        &self.process_order
    }

    /// Reference product of each process, aligned with [`Self::process_order`].
    pub fn product_order(&self) -> &[String] {
        &self.product_order
    }

    pub fn flow_order(&self) -> &[String] {
        &self.flow_order
    }

    pub fn technosphere(&self) -> &SparseMatrix {
        &self.technosphere
    }

    pub fn biosphere(&self) -> &SparseMatrix {
        &self.biosphere
    }

    pub fn process_index(&self, id: &str) -> Option<usize> {
        self.process_order.iter().position(|p| p == id)
    }

    pub fn product_row(&self, flow: &str) -> Option<usize> {
        self.product_index.get(flow).copied()
    }

    /// Dense demand vector aligned with the product rows.
    pub fn demand_column(&self, demand: &DemandVector) -> Result<Vec<f64>, SolveError> {
        let mut f = vec![0.0; self.process_order.len()];
        for (flow, amount) in demand.iter() {
            let row = self
                .product_row(flow)
                .ok_or_else(|| SolveError::UnknownDemandFlow(flow.to_string()))?;
            f[row] += amount;
        }
        Ok(f)
    }

    pub fn factorize(&self) -> Result<Factorized<'_>, SolveError> {
        let factorization = BlockFactorization::new(&self.technosphere).map_err(|e| self.map_linear_error(e))?;
        Ok(Factorized {
            system: self,
            factorization,
        })
    }

    pub(crate) fn map_linear_error(&self, e: LinearSolveError) -> SolveError {
        match e {
            LinearSolveError::Singular { indices, residual } => SolveError::SingularSystem {
                processes: indices.into_iter().map(|i| self.process_order[i].clone()).collect(),
                residual,
            },
            LinearSolveError::NotSquare { nrows, ncols } => SolveError::SingularSystem {
                processes: vec![format!("{nrows}x{ncols}")],
                residual: f64::INFINITY,
            },
        }
    }

    pub(crate) fn scaling_from_dense(&self, s: &[f64]) -> ScalingVector {
        ScalingVector {
            entries: self.process_order.iter().cloned().zip(s.iter().copied()).collect(),
        }
    }

    pub(crate) fn dense_scaling(&self, s: &ScalingVector) -> Vec<f64> {
        self.process_order.iter().map(|p| s.get(p)).collect()
    }

    pub(crate) fn inventory_from_dense(&self, s: &[f64]) -> InventoryVector {
        let g = self.biosphere.mul_vec(s);
        InventoryVector {
            entries: self.flow_order.iter().cloned().zip(g).collect(),
        }
    }
}

impl fmt::Display for TechnosphereSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} processes, {} elementary flows, {} technosphere / {} biosphere entries",
            self.process_order.len(),
            self.flow_order.len(),
            self.technosphere.nnz(),
            self.biosphere.nnz()
        )
    }
}

/// A system with its technosphere matrix factorized, for repeated solves.
pub struct Factorized<'a> {
    system: &'a TechnosphereSystem,
    factorization: BlockFactorization,
}

impl Factorized<'_> {
    pub fn solve_dense(&self, f: &[f64]) -> Result<Vec<f64>, SolveError> {
        self.factorization
            .solve(f)
            .map_err(|e| self.system.map_linear_error(e))
    }

    pub fn solve(&self, demand: &DemandVector) -> Result<ScalingVector, SolveError> {
        let f = self.system.demand_column(demand)?;
        let s = self.solve_dense(&f)?;
        Ok(self.system.scaling_from_dense(&s))
    }

    pub fn loop_count(&self) -> usize {
        self.factorization.loop_count()
    }
}

/// Builds the technosphere and biosphere matrices, processes sorted by id.
pub fn assemble(db: &InventoryDatabase) -> Result<TechnosphereSystem, SolveError> {
    let order: Vec<&str> = db.processes().map(|p| p.id.as_str()).collect();
    assemble_ordered(db, &order)
}

/// Like [`assemble`] with a caller-chosen process order. `order` must be a
/// permutation of the database's process ids.
pub fn assemble_ordered(db: &InventoryDatabase, order: &[&str]) -> Result<TechnosphereSystem, SolveError> {
    let report = validate_database(db);
    if !report.is_clean() {
        return Err(SolveError::InvalidDatabase(report));
    }
    let mut sorted: Vec<&str> = order.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let expected: Vec<&str> = db.processes().map(|p| p.id.as_str()).collect();
    assert_eq!(sorted, expected, "process order must be a permutation of the database's processes");

    let processes: Vec<_> = order.iter().map(|id| db.process(id).expect("checked above")).collect();
    let product_order: Vec<String> = processes.iter().map(|p| p.reference_product.flow.clone()).collect();
    let product_index: BTreeMap<String, usize> =
        product_order.iter().enumerate().map(|(i, f)| (f.clone(), i)).collect();
    let flow_order: Vec<String> = db.elementary_flows().map(|f| f.id.clone()).collect();
    let flow_index: BTreeMap<&str, usize> = flow_order.iter().enumerate().map(|(i, f)| (f.as_str(), i)).collect();

    let mut tech = Vec::new();
    let mut bio = Vec::new();
    for (j, process) in processes.iter().enumerate() {
        for exchange in process.all_exchanges() {
            let flow = db.flow(&exchange.flow).expect("validated");
            let amount = exchange.base_amount();
            match flow.kind {
                FlowKind::Product => {
                    let row = product_index[&flow.id];
                    let signed = match exchange.direction {
                        Direction::Output => amount,
                        Direction::Input => -amount,
                    };
                    tech.push((row, j, signed));
                }
                // Elementary exchanges are magnitudes; the flow (and its
                // compartment) says whether it is a resource or an emission.
                FlowKind::Elementary => bio.push((flow_index[flow.id.as_str()], j, amount)),
            }
        }
    }

    let n = processes.len();
    Ok(TechnosphereSystem {
        process_order: order.iter().map(|s| s.to_string()).collect(),
        product_order,
        flow_order: flow_order.clone(),
        technosphere: SparseMatrix::from_triplets(n, n, tech),
        biosphere: SparseMatrix::from_triplets(flow_order.len(), n, bio),
        product_index,
    })
}

/// Solves `A·s = f` for the demanded products.
pub fn solve_scaling(sys: &TechnosphereSystem, demand: &DemandVector) -> Result<ScalingVector, SolveError> {
    sys.factorize()?.solve(demand)
}

/// `g = B·s`.
pub fn inventory(sys: &TechnosphereSystem, s: &ScalingVector) -> InventoryVector {
    sys.inventory_from_dense(&sys.dense_scaling(s))
}

/// Assemble, solve and aggregate in one call.
pub fn compute_inventory(db: &InventoryDatabase, demand: &DemandVector) -> Result<InventoryVector, SolveError> {
    let sys = assemble(db)?;
    let s = solve_scaling(&sys, demand)?;
    Ok(inventory(&sys, &s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inventory::{Exchange, Flow, Process};
    use crate::units::Unit;

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
            Process::new("Q", "foil", Exchange::output("foil", 1.0, u("kg")))
                .with_exchange(Exchange::input("electricity", 2.0, u("kWh")))
                .with_exchange(Exchange::output("co2", 0.1, u("kg"))),
        )
        .unwrap();
        db
    }

    fn looped() -> InventoryDatabase {
        let mut db = chain();
        let mut p = db.process("P").unwrap().clone();
        p.exchanges.push(Exchange::input("foil", 0.1, u("kg")));
        let mut fresh = InventoryDatabase::default();
        for f in db.flows() {
            fresh.add_flow(f.clone()).unwrap();
        }
        fresh.add_process(p).unwrap();
        fresh.add_process(db.process("Q").unwrap().clone()).unwrap();
        db = fresh;
        db
    }

    #[test]
    fn chain_matrices() {
        let sys = assemble(&chain()).unwrap();
        assert_eq!(sys.process_order(), ["P", "Q"]);
        // base units: kWh -> Wh
        let a = sys.technosphere().to_dense();
        assert_eq!(a[(0, 0)], 1000.0);
        assert_eq!(a[(0, 1)], -2000.0);
        assert_eq!(a[(1, 0)], 0.0);
        assert_eq!(a[(1, 1)], 1.0);
        let b = sys.biosphere().to_dense();
        assert_eq!((b[(0, 0)], b[(0, 1)]), (0.5, 0.1));
    }

    #[test]
    fn single_process() {
        let mut db = InventoryDatabase::default();
        db.add_flow(Flow::product("electricity", "electricity", u("Wh"))).unwrap();
        db.add_flow(Flow::elementary("co2", "carbon dioxide", u("kg"), "air")).unwrap();
        db.add_process(
            Process::new("P", "power", Exchange::output("electricity", 1.0, u("Wh")))
                .with_exchange(Exchange::output("co2", 0.25, u("kg")))
                .with_exchange(Exchange::output("co2", 0.25, u("kg"))),
        )
        .unwrap();
        let sys = assemble(&db).unwrap();
        assert_eq!(sys.technosphere().to_dense()[(0, 0)], 1.0);
        assert_eq!(sys.biosphere().to_dense()[(0, 0)], 0.5);
        assert_eq!(sys.biosphere().nnz(), 1);
    }

    #[test]
    fn chain_scaling_and_inventory() {
        let sys = assemble(&chain()).unwrap();
        let s = solve_scaling(&sys, &DemandVector::single("foil", 1.0).unwrap()).unwrap();
        // P is scaled in its own reference amount (1 kWh): 2 kWh needed.
        assert_eq!(s.get("P"), 2.0);
        assert_eq!(s.get("Q"), 1.0);
        let g = inventory(&sys, &s);
        assert!((g.get("co2") - 1.1).abs() < 1e-12);

        let s = solve_scaling(&sys, &DemandVector::single("electricity", 1000.0).unwrap()).unwrap();
        assert_eq!((s.get("P"), s.get("Q")), (1.0, 0.0));
        assert_eq!(inventory(&sys, &s).get("co2"), 0.5);
    }

    #[test]
    fn looped_pair() {
        let sys = assemble(&looped()).unwrap();
        let s = solve_scaling(&sys, &DemandVector::single("foil", 1.0).unwrap()).unwrap();
        assert!((s.get("P") - 2.5).abs() < 1e-12);
        assert!((s.get("Q") - 1.25).abs() < 1e-12);
    }

    #[test]
    fn zero_scaling_gives_zero_inventory() {
        let sys = assemble(&chain()).unwrap();
        let g = inventory(&sys, &ScalingVector::default());
        assert!(g.iter().all(|(_, v)| v == 0.0));
    }

    #[test]
    fn unknown_demand_flow() {
        let sys = assemble(&chain()).unwrap();
        let err = solve_scaling(&sys, &DemandVector::single("co2", 1.0).unwrap()).unwrap_err();
        assert_eq!(err.code(), "UNKNOWN_DEMAND_FLOW");
    }

    #[test]
    fn singular_self_consumption() {
        let mut db = InventoryDatabase::default();
        db.add_flow(Flow::product("x", "x", u("kg"))).unwrap();
        db.add_process(
            Process::new("X", "x", Exchange::output("x", 1.0, u("kg"))).with_exchange(Exchange::input("x", 1.0, u("kg"))),
        )
        .unwrap();
        let sys = assemble(&db).unwrap();
        let err = solve_scaling(&sys, &DemandVector::single("x", 1.0).unwrap()).unwrap_err();
        assert_eq!(err.code(), "SINGULAR_SYSTEM");
    }

    #[test]
    fn invalid_database_is_refused() {
        let mut db = chain();
        db.add_process(Process::new("P2", "power", Exchange::output("electricity", 1.0, u("kWh"))))
            .unwrap();
        assert_eq!(assemble(&db).unwrap_err().code(), "INVALID_DATABASE");
    }

    #[test]
    fn empty_demand_is_refused() {
        assert!(DemandVector::new([("foil".to_string(), 0.0)]).is_err());
        assert!(DemandVector::new(Vec::<(String, f64)>::new()).is_err());
        assert!(DemandVector::single("foil", f64::NAN).is_err());
    }

    #[test]
    fn permuted_order_gives_same_inventory() {
        let db = looped();
        let f = DemandVector::single("foil", 3.0).unwrap();
        let a = assemble_ordered(&db, &["P", "Q"]).unwrap();
        let b = assemble_ordered(&db, &["Q", "P"]).unwrap();
        let ga = inventory(&a, &solve_scaling(&a, &f).unwrap());
        let gb = inventory(&b, &solve_scaling(&b, &f).unwrap());
        assert!(ga.max_relative_difference(&gb) <= 1e-12);
    }
}
