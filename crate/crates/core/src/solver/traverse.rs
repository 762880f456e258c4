use std::collections::BTreeMap;

use crate::inventory::{Direction, FlowKind, InventoryDatabase};

use super::{DemandVector, InventoryVector};

/// Inventory by breadth-first expansion of the supply graph, without any
/// matrix algebra.
///
/// Level 0 covers the processes supplying the demand directly; each further
/// level supplies the product inputs requested by the previous one. Expansion
/// stops after `max_depth` levels, so loops are truncated rather than solved.
/// Demanded flows without a provider are dropped. Used as an independent
/// check on [`super::compute_inventory`].
pub fn traverse_oracle(db: &InventoryDatabase, demand: &DemandVector, max_depth: usize) -> InventoryVector {
    let providers = db.provider_index();
    let mut totals: BTreeMap<String, f64> = db.elementary_flows().map(|f| (f.id.clone(), 0.0)).collect();

    let mut frontier: BTreeMap<&str, f64> = demand.iter().filter(|(_, v)| *v != 0.0).collect();
    for _depth in 0..=max_depth {
        if frontier.is_empty() {
            break;
        }
        let mut next: BTreeMap<&str, f64> = BTreeMap::new();
        for (product, amount) in frontier {
            let Some(process) = providers.get(product) else {
                continue;
            };
            let scale = amount / process.reference_product.base_amount();
            for exchange in &process.exchanges {
                let Some(flow) = db.flow(&exchange.flow) else {
                    continue;
                };
                let quantity = scale * exchange.base_amount();
                match (flow.kind, exchange.direction) {
                    (FlowKind::Elementary, _) => *totals.entry(flow.id.clone()).or_insert(0.0) += quantity,
                    (FlowKind::Product, Direction::Input) => *next.entry(flow.id.as_str()).or_insert(0.0) += quantity,
                    (FlowKind::Product, Direction::Output) => {}
                }
            }
        }
        frontier = next;
    }

    InventoryVector { entries: totals }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inventory::{Exchange, Flow, Process};
    use crate::units::Unit;

    fn u(s: &str) -> Unit {
        Unit::lookup(s).unwrap()
    }

    fn db(looped: bool) -> InventoryDatabase {
        let mut db = InventoryDatabase::default();
        db.add_flow(Flow::product("electricity", "electricity", u("kWh"))).unwrap();
        db.add_flow(Flow::product("foil", "Mg foil", u("kg"))).unwrap();
        db.add_flow(Flow::elementary("co2", "carbon dioxide", u("kg"), "air")).unwrap();
        let mut p = Process::new("P", "power", Exchange::output("electricity", 1.0, u("kWh")))
            .with_exchange(Exchange::output("co2", 0.5, u("kg")));
        if looped {
            p = p.with_exchange(Exchange::input("foil", 0.1, u("kg")));
        }
        db.add_process(p).unwrap();
        db.add_process(
            Process::new("Q", "foil", Exchange::output("foil", 1.0, u("kg")))
                .with_exchange(Exchange::input("electricity", 2.0, u("kWh")))
                .with_exchange(Exchange::output("co2", 0.1, u("kg"))),
        )
        .unwrap();
        db
    }

    #[test]
    fn acyclic_chain() {
        let g = traverse_oracle(&db(false), &DemandVector::single("foil", 1.0).unwrap(), 10);
        assert!((g.get("co2") - 1.1).abs() < 1e-15);
    }

    #[test]
    fn depth_zero_only_direct_exchanges() {
        let g = traverse_oracle(&db(false), &DemandVector::single("foil", 1.0).unwrap(), 0);
        assert_eq!(g.get("co2"), 0.1);
    }

    #[test]
    fn loop_converges_to_geometric_series() {
        // s_Q = 1 / (1 - 0.2) = 1.25, s_P = 2.5, co2 = 2.5·0.5 + 1.25·0.1
        let g = traverse_oracle(&db(true), &DemandVector::single("foil", 1.0).unwrap(), 50);
        assert!((g.get("co2") - 1.375).abs() < 1e-12);
    }
}
