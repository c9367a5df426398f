//! JSON emission with every float written to 17 significant digits.

use serde::Serialize;
use serde_json::{Number, Value};

fn fix_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                if x.is_finite() {
                    *n = format!("{x:.16e}").parse::<Number>().expect("formatted float is valid JSON");
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(fix_floats),
        Value::Object(map) => map.values_mut().for_each(fix_floats),
        _ => {}
    }
}

pub fn to_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut v = serde_json::to_value(value)?;
    fix_floats(&mut v);
    serde_json::to_string_pretty(&v)
}
