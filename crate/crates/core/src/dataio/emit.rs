use serde_json::{json, Map, Value};

use crate::inventory::{Exchange, FlowKind};

use super::{ComparisonSource, Dataset};

fn amount(x: f64, unit: &str) -> Value {
    json!({ "amount": x, "unit": unit })
}

fn exchange(e: &Exchange, reference: bool) -> Value {
    let mut m = Map::new();
    m.insert("flow".into(), json!(e.flow));
    if !reference {
        m.insert("direction".into(), json!(e.direction.as_str()));
    }
    m.insert("amount".into(), json!(e.amount));
    m.insert("unit".into(), json!(e.unit.symbol()));
    Value::Object(m)
}

fn roles<'a>(roles: impl Iterator<Item = &'a crate::battery::Role>) -> Value {
    Value::Array(roles.map(|r| json!(r.as_str())).collect())
}

/// Serializes a dataset. Key order is fixed and collections come out in
/// a stable order, so emitting the same dataset twice gives identical text.
pub fn emit(ds: &Dataset) -> String {
    let db = &ds.database;
    let flows: Vec<Value> = db
        .flows()
        .map(|f| {
            let mut m = Map::new();
            m.insert("id".into(), json!(f.id));
            m.insert("name".into(), json!(f.name));
            m.insert(
                "kind".into(),
                json!(match f.kind {
                    FlowKind::Product => "product",
                    FlowKind::Elementary => "elementary",
                }),
            );
            m.insert("unit".into(), json!(f.unit.symbol()));
            if let Some(c) = &f.compartment {
                m.insert("compartment".into(), json!(c));
            }
            Value::Object(m)
        })
        .collect();

    let processes: Vec<Value> = db
        .processes()
        .map(|p| {
            json!({
                "id": p.id,
                "name": p.name,
                "reference_product": exchange(&p.reference_product, true),
                "exchanges": p.exchanges.iter().map(|e| exchange(e, false)).collect::<Vec<_>>(),
            })
        })
        .collect();

    let methods: Vec<Value> = ds
        .methods
        .iter()
        .map(|m| {
            let categories: Vec<Value> = m
                .categories()
                .iter()
                .map(|c| {
                    json!({
                        "id": c.id,
                        "name": c.name,
                        "unit": c.unit,
                        "factors": c.factors.iter().map(|(k, v)| (k.clone(), json!(v))).collect::<Map<_, _>>(),
                    })
                })
                .collect();
            json!({ "id": m.id, "name": m.name, "categories": categories })
        })
        .collect();

    let cells: Vec<Value> = ds
        .cells
        .iter()
        .map(|c| {
            let components: Vec<Value> = c
                .components()
                .iter()
                .map(|x| {
                    json!({
                        "role": x.role.as_str(),
                        "material": x.material,
                        "mass": amount(x.mass_mg, "mg"),
                    })
                })
                .collect();
            json!({
                "name": c.name(),
                "cell_energy": amount(c.cell_energy_wh(), "Wh"),
                "components": components,
            })
        })
        .collect();

    let packs: Vec<Value> = ds
        .packs
        .iter()
        .map(|p| {
            let mut v = json!({
                "id": p.id,
                "cell_share": p.cell_share,
                "housing_share": p.housing_share,
                "bms_share": p.bms_share,
                "pack_mass": amount(p.pack_mass_kg, "kg"),
                "housing_material": p.housing_material,
                "bms_material": p.bms_material,
            });
            if let Some(f) = &p.cell_manufacturing {
                v["cell_manufacturing"] = json!(f);
            }
            v
        })
        .collect();

    let scenarios: Vec<Value> = ds
        .scenarios
        .iter()
        .map(|s| {
            let overrides: Vec<Value> = s
                .overrides
                .iter()
                .map(|o| {
                    use crate::scenario::Override::*;
                    match o {
                        ReplaceProvider { flow, new_process } => {
                            json!({ "kind": o.kind(), "flow": flow, "new_process": new_process })
                        }
                        ScaleExchange { process, flow, factor } => {
                            json!({ "kind": o.kind(), "process": process, "flow": flow, "factor": factor })
                        }
                        SetComponentMass { cell, role, mass_mg } => json!({
                            "kind": o.kind(),
                            "cell": cell,
                            "role": role.as_str(),
                            "mass": amount(*mass_mg, "mg"),
                        }),
                    }
                })
                .collect();
            json!({ "id": s.id, "overrides": overrides })
        })
        .collect();

    let comparisons: Vec<Value> = ds
        .comparisons
        .iter()
        .map(|c| {
            let mut m = Map::new();
            m.insert("name".into(), json!(c.name));
            if let Some(d) = c.original_density {
                m.insert("original_density".into(), json!(d));
            }
            if let Some(d) = c.adjusted_density {
                m.insert("adjusted_density".into(), json!(d));
            }
            match &c.source {
                ComparisonSource::Reported(r) => {
                    let values: Map<String, Value> = r.per_category.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
                    m.insert("impacts".into(), json!({ "method": r.method, "values": values }));
                }
                ComparisonSource::Modeled { cell, pack } => {
                    m.insert("cell".into(), json!(cell));
                    m.insert("pack".into(), json!(pack));
                }
            }
            Value::Object(m)
        })
        .collect();

    let evolutions: Vec<Value> = ds
        .evolutions
        .iter()
        .map(|e| {
            let targets: Map<String, Value> = e
                .spec
                .target_shares
                .iter()
                .map(|(r, x)| (r.as_str().to_string(), json!(x)))
                .collect();
            json!({
                "id": e.id,
                "base": e.base,
                "name": e.name,
                "fixed_roles": roles(e.spec.fixed_roles.iter()),
                "target_shares": targets,
                "preserved_share_roles": roles(e.spec.preserved_share_roles.iter()),
            })
        })
        .collect();

    let doc = json!({
        "format_version": ds.format_version,
        "metadata": { "name": db.metadata.name, "version": db.metadata.version },
        "flows": flows,
        "processes": processes,
        "methods": methods,
        "cells": cells,
        "packs": packs,
        "scenarios": scenarios,
        "comparisons": comparisons,
        "evolutions": evolutions,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("JSON values always serialize");
    text.push('\n');
    text
}
