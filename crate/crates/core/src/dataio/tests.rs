use super::*;
use proptest::prelude::*;

const SMALL: &str = r#"{
  "format_version": "1.0",
  "metadata": {"name": "small", "version": "1"},
  "flows": [
    {"id": "elec", "name": "electricity", "kind": "product", "unit": "kWh"},
    {"id": "foil", "name": "Mg foil", "kind": "product", "unit": "kg"},
    {"id": "case", "name": "housing", "kind": "product", "unit": "kg"},
    {"id": "co2", "name": "carbon dioxide", "kind": "elementary", "unit": "kg", "compartment": "air"}
  ],
  "processes": [
    {"id": "P", "name": "grid", "reference_product": {"flow": "elec", "amount": 1, "unit": "kWh"},
     "exchanges": [{"flow": "co2", "direction": "output", "amount": 0.5, "unit": "kg"}]},
    {"id": "Q", "name": "rolling", "reference_product": {"flow": "foil", "amount": 1, "unit": "kg"},
     "exchanges": [{"flow": "elec", "direction": "input", "amount": 2, "unit": "kWh"},
                   {"flow": "co2", "direction": "output", "amount": 100, "unit": "g"}]},
    {"id": "R", "name": "casing", "reference_product": {"flow": "case", "amount": 1, "unit": "kg"},
     "exchanges": [{"flow": "elec", "direction": "input", "amount": 1, "unit": "kWh"}]}
  ],
  "methods": [
    {"id": "m", "name": "demo", "categories": [
      {"id": "gwp", "name": "GWP", "unit": "kg CO2-eq", "factors": {"co2": 1}}]}
  ],
  "cells": [
    {"name": "c", "cell_energy": {"amount": 1, "unit": "Wh"},
     "components": [
       {"role": "anode", "material": "foil", "mass": {"amount": 0.5, "unit": "g"}},
       {"role": "housing", "material": "case", "mass": {"amount": 500, "unit": "mg"}}]}
  ],
  "packs": [
    {"id": "p", "cell_share": 0.8, "housing_share": 0.145, "bms_share": 0.055,
     "pack_mass": {"amount": 1, "unit": "kg"}, "housing_material": "case", "bms_material": "foil"}
  ],
  "scenarios": [
    {"id": "half", "overrides": [{"kind": "scale_exchange", "process": "Q", "flow": "elec", "factor": 0.5}]}
  ],
  "comparisons": [
    {"name": "lit", "original_density": 100, "adjusted_density": 120,
     "impacts": {"method": "m", "values": {"gwp": 0.1}}},
    {"name": "c", "cell": "c", "pack": "p"}
  ],
  "evolutions": [
    {"id": "e", "base": "c", "name": "c2", "fixed_roles": ["anode"], "target_shares": {"housing": 0.1},
     "preserved_share_roles": []}
  ]
}"#;

fn errors(text: &str) -> Vec<ParseDiagnostic> {
    let diags = parse_str(text).unwrap_err();
    assert!(diags.iter().any(|d| d.severity == Severity::Error));
    diags
}

fn has(diags: &[ParseDiagnostic], code: &str, path: &str) -> bool {
    diags.iter().any(|d| d.code == code && d.path == path)
}

#[test]
fn small_document_parses() {
    let parsed = parse_str(SMALL).unwrap();
    assert!(parsed.warnings.is_empty(), "{:?}", parsed.warnings);
    let ds = parsed.dataset;
    assert_eq!(ds.database.process_count(), 3);
    assert!((ds.cells[0].mass_of(Role::Anode).unwrap() - 500.0).abs() < 1e-9);
    assert_eq!(ds.packs[0].pack_mass_kg, 1.0);
    assert_eq!(ds.comparisons.len(), 2);
    assert_eq!(ds.evolutions[0].spec.target_shares[&Role::Housing], 0.1);
}

#[test]
fn emit_round_trips_and_is_stable() {
    let ds = parse_str(SMALL).unwrap().dataset;
    let text = emit(&ds);
    let again = parse_str(&text).unwrap().dataset;
    assert_eq!(again, ds);
    assert_eq!(emit(&again), text);
}

#[test]
fn minimal_document() {
    let ds = parse_str(r#"{"format_version": "1.0",
        "flows": [{"id": "x", "name": "x", "kind": "product", "unit": "kg"}]}"#)
    .unwrap()
    .dataset;
    assert_eq!(ds.database.flow_count(), 1);
    assert_eq!(parse_str(&emit(&ds)).unwrap().dataset, ds);
}

#[test]
fn empty_document_needs_a_version() {
    let d = errors("{}");
    assert!(has(&d, "MISSING_FIELD", "/format_version"));
    assert_eq!(errors("")[0].code, "SYNTAX");
    assert_eq!(errors("[]")[0].code, "BAD_VALUE");
}

#[test]
fn unsupported_version() {
    let d = errors(r#"{"format_version": "2.0"}"#);
    assert!(has(&d, "VERSION_UNSUPPORTED", "/format_version"));
}

#[test]
fn dangling_flow_is_located() {
    let text = SMALL.replace(r#"{"flow": "elec", "direction": "input", "amount": 2"#, r#"{"flow": "steam", "direction": "input", "amount": 2"#);
    let d = errors(&text);
    let hit = d.iter().find(|d| d.code == "DANGLING_REF").unwrap();
    assert_eq!(hit.path, "/processes/1/exchanges/0/flow");
    assert!(hit.message.contains("steam"));
}

#[test]
fn unknown_fields_only_warn() {
    let text = SMALL.replacen(r#""name": "small""#, r#""name": "small", "colour": "blue""#, 1);
    let text = text.replacen(r#""format_version": "1.0","#, r#""format_version": "1.0", "extra": [],"#, 1);
    let parsed = parse_str(&text).unwrap();
    assert_eq!(parsed.warnings.len(), 2);
    assert!(has(&parsed.warnings, "UNKNOWN_FIELD", "/metadata/colour"));
    assert!(has(&parsed.warnings, "UNKNOWN_FIELD", "/extra"));
}

#[test]
fn bad_units() {
    let d = errors(&SMALL.replace(r#""amount": 0.5, "unit": "g""#, r#""amount": 0.5, "unit": "furlong""#));
    assert!(has(&d, "BAD_UNIT", "/cells/0/components/0/mass/unit"));
    let d = errors(&SMALL.replace(r#""amount": 0.5, "unit": "g""#, r#""amount": 0.5, "unit": "kWh""#));
    assert!(has(&d, "BAD_UNIT", "/cells/0/components/0/mass/unit"));
}

#[test]
fn validation_findings_surface_with_paths() {
    let d = errors(&SMALL.replace(
        r#""reference_product": {"flow": "case", "amount": 1"#,
        r#""reference_product": {"flow": "foil", "amount": 1"#,
    ));
    assert!(d.iter().any(|x| x.code == "DUPLICATE_PROVIDER"));
    let d = errors(&SMALL.replace(r#""amount": 100, "unit": "g""#, r#""amount": 100, "unit": "kWh""#));
    assert!(has(&d, "UNIT_MISMATCH", "/processes/1/exchanges/1"));
}

#[test]
fn cross_references_are_checked() {
    let d = errors(&SMALL.replace(r#""base": "c""#, r#""base": "zz""#));
    assert!(has(&d, "DANGLING_REF", "/evolutions/0/base"));
    let d = errors(&SMALL.replace(r#""process": "Q""#, r#""process": "Z""#));
    assert!(has(&d, "DANGLING_REF", "/scenarios/0/overrides/0/process"));
    let d = errors(&SMALL.replace(r#""values": {"gwp": 0.1}"#, r#""values": {}"#));
    assert!(has(&d, "MISSING_FIELD", "/comparisons/0/impacts/values/gwp"));
    let d = errors(&SMALL.replace(r#""cell": "c", "pack": "p""#, r#""cell": "c", "pack": "q""#));
    assert!(has(&d, "DANGLING_REF", "/comparisons/1/pack"));
}

#[test]
fn domain_errors_carry_module_codes() {
    let d = errors(&SMALL.replace(r#""bms_share": 0.055"#, r#""bms_share": 0.5"#));
    assert!(has(&d, "INVALID_PACK", "/packs/0"));
    let d = errors(&SMALL.replace(r#""target_shares": {"housing": 0.1}"#, r#""target_shares": {"housing": 1.5}"#));
    assert!(has(&d, "SHARES_EXCEED_ONE", "/evolutions/0"));
    let d = errors(&SMALL.replace(r#""role": "housing""#, r#""role": "anode""#));
    assert!(has(&d, "DUPLICATE_ROLE", "/cells/0"));
}

#[test]
fn duplicate_ids() {
    let text = SMALL.replace(
        r#"{"id": "case", "name": "housing""#,
        r#"{"id": "foil", "name": "dup", "kind": "product", "unit": "kg"}, {"id": "case", "name": "housing""#,
    );
    assert!(has(&errors(&text), "DUPLICATE_ID", "/flows/2/id"));
}

#[test]
fn wrong_types_are_diagnosed() {
    let d = errors(&SMALL.replace(r#""cell_share": 0.8"#, r#""cell_share": "0.8""#));
    assert!(has(&d, "BAD_VALUE", "/packs/0/cell_share"));
    let d = errors(&SMALL.replace(r#""flows": ["#, r#""flows": 3, "x": ["#));
    assert!(has(&d, "BAD_VALUE", "/flows"));
}

#[test]
fn modeled_comparison_is_evaluated() {
    let ds = parse_str(SMALL).unwrap().dataset;
    let entries = ds.comparison_entries(&ds.methods[0], &ds.database, &ds.cells).unwrap();
    assert_eq!(entries[0].adjusted_density, 120.0);
    // 1 Wh over 1 g of cell at 80 % of pack mass
    assert!((entries[1].adjusted_density - 800.0).abs() < 1e-9);
    assert!(entries[1].per_wh_impacts.value("gwp").unwrap() > 0.0);
}

proptest! {
    #[test]
    fn truncated_documents_never_panic(cut in 0usize..SMALL.len()) {
        if SMALL.is_char_boundary(cut) {
            let r = parse_str(&SMALL[..cut]);
            prop_assert!(r.is_err());
        }
    }

    #[test]
    fn arbitrary_bytes_never_panic(bytes in proptest::collection::vec(any::<u8>(), 0..256)) {
        if let Err(d) = parse(&bytes) {
            prop_assert!(!d.is_empty());
        }
    }
}
