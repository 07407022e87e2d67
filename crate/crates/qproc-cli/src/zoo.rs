//! Named fixture models reachable from the command line.
//!
//! Each entry wraps a programmatic constructor from the core crate, accepts
//! a fixed set of numeric parameters with defaults, and reports the resolved
//! parameters back through the model for provenance.

use qproc_core::{zoo, Error, GeneratorModel, Result};

struct Entry {
    name: &'static str,
    summary: &'static str,
    params: &'static [(&'static str, f64)],
    build: fn(&[(String, f64)]) -> Result<GeneratorModel>,
}

const ENTRIES: &[Entry] = &[
    Entry {
        name: "bounded-bd",
        summary: "birth-death chain with unit rates in both directions",
        params: &[],
        build: |_| zoo::birth_death(|_| 1.0, |n| if n > 0 { 1.0 } else { 0.0 }),
    },
    Entry {
        name: "pb-linear",
        summary: "pure birth with rate n+1",
        params: &[],
        build: |_| Ok(zoo::pure_birth(|n| (n + 1) as f64)),
    },
    Entry {
        name: "pb-quadratic",
        summary: "pure birth with rate (n+1)^2",
        params: &[],
        build: |_| {
            Ok(zoo::pure_birth(|n| {
                let k = (n + 1) as f64;
                k * k
            }))
        },
    },
    Entry {
        name: "pb-geometric",
        summary: "pure birth with rate 2^n",
        params: &[],
        build: |_| Ok(zoo::pure_birth(|n| (n as f64).exp2())),
    },
    Entry {
        name: "pb-log-squared",
        summary: "pure birth with rate (n+1) * ln(n+2)^2",
        params: &[],
        build: |_| {
            Ok(zoo::pure_birth(|n| {
                let log = ((n + 2) as f64).ln();
                (n + 1) as f64 * log * log
            }))
        },
    },
    Entry {
        name: "pb-prime",
        summary: "pure birth whose n-th rate is the n-th prime",
        params: &[("states", 200_000.0)],
        build: |params| {
            let states = integer_param(params, "states", 2.0, 50_000_000.0)?;
            Ok(zoo::prime_birth(states as usize))
        },
    },
    Entry {
        name: "bd-cubic",
        summary: "birth-death with births (n+1)^3 and deaths n",
        params: &[],
        build: |_| {
            zoo::birth_death(
                |n| {
                    let k = (n + 1) as f64;
                    k * k * k
                },
                |n| n as f64,
            )
        },
    },
    Entry {
        name: "bd-pullback",
        summary: "birth-death with births 1+n^2 and deaths n^4",
        params: &[],
        build: |_| {
            zoo::birth_death(
                |n| 1.0 + (n as f64) * (n as f64),
                |n| (n as f64).powi(4),
            )
        },
    },
    Entry {
        name: "schlogl",
        summary: "multi-site reaction-diffusion chain",
        params: &[
            ("sites", 1.0),
            ("beta0", 1.0),
            ("beta2", 1.0),
            ("delta1", 1.0),
            ("delta3", 1.0),
        ],
        build: |params| {
            let sites = integer_param(params, "sites", 1.0, 16.0)? as usize;
            zoo::schlogl(zoo::SchloglParams {
                sites,
                beta0: lookup(params, "beta0"),
                beta2: lookup(params, "beta2"),
                delta1: lookup(params, "delta1"),
                delta3: lookup(params, "delta3"),
                routing: None,
            })
        },
    },
    Entry {
        name: "interleaved-bq",
        summary: "bounded chain on odd states interleaved with quadratic pure birth on even states",
        params: &[("bridge", 0.0)],
        build: |params| {
            let bridge = integer_param(params, "bridge", 0.0, 1.0)? != 0.0;
            let bounded = zoo::birth_death(|_| 1.0, |n| if n > 0 { 1.0 } else { 0.0 })?;
            let quadratic = zoo::pure_birth(|n| {
                let k = (n + 1) as f64;
                k * k
            });
            zoo::interleaved(bounded, quadratic, bridge)
        },
    },
];

/// The fixture names accepted by `--zoo`, in listing order.
pub fn zoo_names() -> Vec<&'static str> {
    ENTRIES.iter().map(|e| e.name).collect()
}

/// One line per fixture for help and error text.
pub fn zoo_listing() -> String {
    ENTRIES
        .iter()
        .map(|e| {
            if e.params.is_empty() {
                format!("  {:<16} {}", e.name, e.summary)
            } else {
                let params = e
                    .params
                    .iter()
                    .map(|(k, v)| format!("{k}={v}"))
                    .collect::<Vec<_>>()
                    .join(", ");
                format!("  {:<16} {} (params: {params})", e.name, e.summary)
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Builds a fixture by name, merging the given parameters over defaults.
pub fn build_zoo_model(name: &str, params: &[(String, f64)]) -> Result<GeneratorModel> {
    let entry = ENTRIES.iter().find(|e| e.name == name).ok_or_else(|| {
        Error::Usage(format!(
            "unknown zoo model '{name}'; available: {}",
            zoo_names().join(", ")
        ))
    })?;
    for (key, _) in params {
        if !entry.params.iter().any(|(k, _)| k == key) {
            let accepted = if entry.params.is_empty() {
                "none".to_string()
            } else {
                entry
                    .params
                    .iter()
                    .map(|(k, _)| *k)
                    .collect::<Vec<_>>()
                    .join(", ")
            };
            return Err(Error::Usage(format!(
                "unknown parameter '{key}' for zoo model '{name}'; accepted: {accepted}"
            )));
        }
    }
    let merged: Vec<(String, f64)> = entry
        .params
        .iter()
        .map(|(k, default)| {
            let value = params
                .iter()
                .find(|(key, _)| key == k)
                .map_or(*default, |(_, v)| *v);
            (k.to_string(), value)
        })
        .collect();
    let model = (entry.build)(&merged)?;
    Ok(model.renamed(entry.name).with_params(merged))
}

fn lookup(params: &[(String, f64)], key: &str) -> f64 {
    params
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| *v)
        .expect("defaults are merged before build")
}

fn integer_param(params: &[(String, f64)], key: &str, min: f64, max: f64) -> Result<f64> {
    let value = lookup(params, key);
    if value.fract() != 0.0 || value < min || value > max {
        return Err(Error::Usage(format!(
            "parameter '{key}' must be an integer in [{min}, {max}], got {value}"
        )));
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use qproc_core::StateVec;

    #[test]
    fn every_listed_fixture_builds_with_defaults() {
        for name in zoo_names() {
            let model = build_zoo_model(name, &[]).unwrap();
            assert_eq!(model.name(), name);
            let origin = StateVec::origin(model.dimension());
            model.transitions_of(&origin).unwrap();
        }
    }

    #[test]
    fn unknown_names_list_the_alternatives() {
        let err = build_zoo_model("nope", &[]).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("pb-linear"), "unhelpful: {text}");
        assert!(text.contains("schlogl"), "unhelpful: {text}");
    }

    #[test]
    fn unknown_parameters_list_the_accepted_set() {
        let err = build_zoo_model("schlogl", &[("gamma".into(), 1.0)]).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("beta0"), "unhelpful: {text}");
    }

    #[test]
    fn parameters_override_defaults() {
        let model = build_zoo_model("schlogl", &[("sites".into(), 3.0)]).unwrap();
        assert_eq!(model.dimension(), 3);
        assert!(model.params().contains(&("sites".to_string(), 3.0)));
        assert!(model.params().contains(&("beta0".to_string(), 1.0)));
    }

    #[test]
    fn the_bridge_parameter_connects_the_parts() {
        let separate = build_zoo_model("interleaved-bq", &[]).unwrap();
        let bridged = build_zoo_model("interleaved-bq", &[("bridge".into(), 1.0)]).unwrap();
        let at_zero = |m: &qproc_core::GeneratorModel| {
            m.transitions_of(&StateVec::single(0)).unwrap().len()
        };
        assert_eq!(at_zero(&bridged), at_zero(&separate) + 1);
    }

    #[test]
    fn prime_rates_start_at_two() {
        let model = build_zoo_model("pb-prime", &[("states".into(), 10.0)]).unwrap();
        let row = model.transitions_of(&StateVec::single(0)).unwrap();
        assert_eq!(row[0].rate, 2.0);
    }
}
