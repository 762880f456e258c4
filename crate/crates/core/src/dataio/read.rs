use serde_json::{Map, Value};

use crate::units::{Dimension, Unit};

use super::{ParseDiagnostic, Severity};

pub(super) type Object = Map<String, Value>;

/// Walks a JSON document collecting diagnostics. Every accessor reports
/// its own problem and returns `None`, so callers just skip the element.
#[derive(Default)]
pub(super) struct Reader {
    pub diagnostics: Vec<ParseDiagnostic>,
}

pub(super) fn join(path: &str, key: impl std::fmt::Display) -> String {
    let key = key.to_string().replace('~', "~0").replace('/', "~1");
    format!("{path}/{key}")
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

impl Reader {
    pub fn error(&mut self, path: impl Into<String>, code: &str, message: impl Into<String>) {
        self.push(Severity::Error, path.into(), code, message.into());
    }

    pub fn warn(&mut self, path: impl Into<String>, code: &str, message: impl Into<String>) {
        self.push(Severity::Warning, path.into(), code, message.into());
    }

    fn push(&mut self, severity: Severity, path: String, code: &str, message: String) {
        self.diagnostics.push(ParseDiagnostic {
            severity,
            path: if path.is_empty() { "/".into() } else { path },
            code: code.to_string(),
            message,
        });
    }

    pub fn error_count(&self) -> usize {
        self.diagnostics.iter().filter(|d| d.severity == Severity::Error).count()
    }

    pub fn object<'v>(&mut self, v: &'v Value, path: &str) -> Option<&'v Object> {
        match v {
            Value::Object(m) => Some(m),
            other => {
                self.error(path, "BAD_VALUE", format!("expected an object, found {}", type_name(other)));
                None
            }
        }
    }

    pub fn known_fields(&mut self, m: &Object, path: &str, known: &[&str]) {
        for key in m.keys() {
            if !known.contains(&key.as_str()) {
                self.warn(join(path, key), "UNKNOWN_FIELD", format!("unrecognized field `{key}`"));
            }
        }
    }

    fn required<'v>(&mut self, m: &'v Object, key: &str, path: &str) -> Option<&'v Value> {
        let v = m.get(key);
        if v.is_none() {
            self.error(join(path, key), "MISSING_FIELD", format!("missing required field `{key}`"));
        }
        v
    }

    fn as_string(&mut self, v: &Value, path: &str) -> Option<String> {
        match v {
            Value::String(s) => Some(s.clone()),
            other => {
                self.error(path, "BAD_VALUE", format!("expected a string, found {}", type_name(other)));
                None
            }
        }
    }

    fn as_number(&mut self, v: &Value, path: &str) -> Option<f64> {
        match v.as_f64() {
            Some(x) if x.is_finite() => Some(x),
            _ => {
                self.error(path, "BAD_VALUE", format!("expected a finite number, found {}", type_name(v)));
                None
            }
        }
    }

    pub fn string(&mut self, m: &Object, key: &str, path: &str) -> Option<String> {
        let v = self.required(m, key, path)?;
        self.as_string(v, &join(path, key))
    }

    /// `Ok(None)` when absent; `Err(())` when present but not a string.
    pub fn opt_string(&mut self, m: &Object, key: &str, path: &str) -> Result<Option<String>, ()> {
        match m.get(key) {
            None => Ok(None),
            Some(v) => self.as_string(v, &join(path, key)).map(Some).ok_or(()),
        }
    }

    pub fn number(&mut self, m: &Object, key: &str, path: &str) -> Option<f64> {
        let v = self.required(m, key, path)?;
        self.as_number(v, &join(path, key))
    }

    pub fn opt_number(&mut self, m: &Object, key: &str, path: &str) -> Result<Option<f64>, ()> {
        match m.get(key) {
            None => Ok(None),
            Some(v) => self.as_number(v, &join(path, key)).map(Some).ok_or(()),
        }
    }

    pub fn unit(&mut self, symbol: &str, path: &str, dimension: Option<Dimension>) -> Option<Unit> {
        let unit = match Unit::lookup(symbol) {
            Ok(u) => u,
            Err(e) => {
                self.error(path, "BAD_UNIT", e.to_string());
                return None;
            }
        };
        match dimension {
            Some(d) if unit.dimension() != d => {
                self.error(
                    path,
                    "BAD_UNIT",
                    format!("`{symbol}` is a {} unit, expected {}", unit.dimension().as_str(), d.as_str()),
                );
                None
            }
            _ => Some(unit),
        }
    }

    /// An `{"amount": x, "unit": "sym"}` pair stored inline in `m`.
    pub fn inline_amount(&mut self, m: &Object, path: &str, dimension: Option<Dimension>) -> Option<(f64, Unit)> {
        let amount = self.number(m, "amount", path);
        let symbol = self.string(m, "unit", path);
        let unit = self.unit(&symbol?, &join(path, "unit"), dimension);
        Some((amount?, unit?))
    }

    /// An `{"amount": x, "unit": "sym"}` object under `key`, converted to `to`.
    pub fn amount_in(&mut self, m: &Object, key: &str, path: &str, to: &str) -> Option<f64> {
        let v = self.required(m, key, path)?;
        let p = join(path, key);
        let obj = self.object(v, &p)?;
        self.known_fields(obj, &p, &["amount", "unit"]);
        let target = Unit::lookup(to).expect("registered unit");
        let (x, unit) = self.inline_amount(obj, &p, Some(target.dimension()))?;
        crate::units::convert_amount(x, &unit, &target).ok()
    }

    /// Elements of an optional array under `key`.
    pub fn array<'v>(&mut self, m: &'v Object, key: &str, path: &str) -> &'v [Value] {
        match m.get(key) {
            None => &[],
            Some(Value::Array(items)) => items,
            Some(other) => {
                self.error(
                    join(path, key),
                    "BAD_VALUE",
                    format!("expected an array, found {}", type_name(other)),
                );
                &[]
            }
        }
    }

    pub fn string_array(&mut self, m: &Object, key: &str, path: &str) -> Vec<(String, String)> {
        let p = join(path, key);
        let items = self.array(m, key, path);
        items
            .iter()
            .enumerate()
            .filter_map(|(i, v)| {
                let ip = join(&p, i);
                self.as_string(v, &ip).map(|s| (s, ip))
            })
            .collect()
    }

    /// Entries of an optional `{name: number}` object under `key`.
    pub fn number_map(&mut self, m: &Object, key: &str, path: &str) -> Vec<(String, f64, String)> {
        let p = join(path, key);
        let Some(v) = m.get(key) else {
            return Vec::new();
        };
        let Some(obj) = self.object(v, &p) else {
            return Vec::new();
        };
        obj.iter()
            .filter_map(|(k, v)| {
                let kp = join(&p, k);
                self.as_number(v, &kp).map(|x| (k.clone(), x, kp))
            })
            .collect()
    }
}
