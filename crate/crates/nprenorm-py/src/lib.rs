//! Python bindings. Every call runs the command line front end in process
//! and returns the artifact as plain Python objects.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::Value;

create_exception!(nprenorm_py, NprenormError, PyException, "Raised with the error kind and message of a failed command.");

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => i.into_pyobject(py)?.into_any(),
            (None, Some(u)) => u.into_pyobject(py)?.into_any(),
            _ => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(a) => {
            let l = PyList::empty(py);
            for x in a {
                l.append(to_py(py, x)?)?;
            }
            l.into_any()
        }
        Value::Object(o) => {
            let d = PyDict::new(py);
            for (k, x) in o {
                d.set_item(k, to_py(py, x)?)?;
            }
            d.into_any()
        }
    })
}

fn invoke(args: Vec<String>, cache_dir: Option<String>) -> PyResult<Value> {
    let mut argv = vec!["nprenorm".to_string()];
    argv.extend(args);
    match cache_dir {
        Some(d) => argv.extend(["--cache-dir".to_string(), d]),
        None => argv.push("--no-cache".into()),
    }
    argv.extend(["--output".to_string(), "json".to_string()]);
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = nprenorm::cli::run(argv, &mut out, &mut err);
    if code != 0 {
        let text = String::from_utf8_lossy(&err);
        let line = text.lines().find(|l| l.contains("\"error\"")).unwrap_or("");
        let (kind, msg) = match serde_json::from_str::<Value>(line) {
            Ok(v) => (v["error"]["kind"].as_str().unwrap_or("Unknown").to_string(), v["error"]["message"].as_str().unwrap_or("").to_string()),
            Err(_) => ("Unknown".to_string(), text.to_string()),
        };
        return Err(NprenormError::new_err((kind, msg)));
    }
    serde_json::from_slice(&out).map_err(|e| NprenormError::new_err(("Io".to_string(), e.to_string())))
}

/// Run any subcommand, e.g. `run(["siegel", "--digits", "golden2"])`.
/// Returns the whole artifact (command, fingerprint, config, inputs, result).
#[pyfunction]
#[pyo3(signature = (args, cache_dir=None))]
fn run(py: Python<'_>, args: Vec<String>, cache_dir: Option<String>) -> PyResult<Py<PyAny>> {
    let v = py.detach(|| invoke(args, cache_dir))?;
    Ok(to_py(py, &v)?.unbind())
}

fn result_of(py: Python<'_>, args: Vec<String>) -> PyResult<Py<PyAny>> {
    let v = py.detach(|| invoke(args, None))?;
    Ok(to_py(py, &v["result"])?.unbind())
}

fn common(mut args: Vec<String>, depth: Option<usize>, precision: Option<u32>) -> Vec<String> {
    if let Some(d) = depth {
        args.extend(["--depth".into(), d.to_string()]);
    }
    if let Some(p) = precision {
        args.extend(["--precision".into(), p.to_string()]);
    }
    args
}

#[pyfunction]
#[pyo3(signature = (value, depth=20, precision=None))]
fn cf_expand(py: Python<'_>, value: String, depth: usize, precision: Option<u32>) -> PyResult<Py<PyAny>> {
    result_of(py, common(vec!["cf-expand".into(), "--value".into(), value], Some(depth), precision))
}

#[pyfunction]
#[pyo3(signature = (digits, depth=20, precision=None))]
fn brjuno(py: Python<'_>, digits: String, depth: usize, precision: Option<u32>) -> PyResult<Py<PyAny>> {
    result_of(py, common(vec!["brjuno".into(), "--digits".into(), digits], Some(depth), precision))
}

#[pyfunction]
#[pyo3(signature = (digits, b=0.0, k=10, precision=None))]
fn bisequence(py: Python<'_>, digits: String, b: f64, k: usize, precision: Option<u32>) -> PyResult<Py<PyAny>> {
    let args = vec!["bisequence".into(), "--digits".into(), digits, "--B".into(), b.to_string(), "--k".into(), k.to_string()];
    result_of(py, common(args, None, precision))
}

#[pyfunction]
#[pyo3(signature = (digits, n, variant="P".to_string(), seed="cv".to_string(), precision=None))]
fn orbit(py: Python<'_>, digits: String, n: u64, variant: String, seed: String, precision: Option<u32>) -> PyResult<Py<PyAny>> {
    let args = vec!["orbit".into(), "--digits".into(), digits, "--map".into(), variant, "--seed".into(), seed, "--N".into(), n.to_string()];
    result_of(py, common(args, None, precision))
}

#[pyfunction]
#[pyo3(signature = (digits="hiN:50".to_string(), grid=None, radius=1e-3))]
fn renorm_check(py: Python<'_>, digits: String, grid: Option<usize>, radius: f64) -> PyResult<Py<PyAny>> {
    let mut args = vec!["renorm-check".into(), "--digits".into(), digits, "--radius".into(), radius.to_string()];
    if let Some(g) = grid {
        args.extend(["--grid".into(), g.to_string()]);
    }
    result_of(py, args)
}

#[pymodule]
fn nprenorm_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("NprenormError", m.py().get_type::<NprenormError>())?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(cf_expand, m)?)?;
    m.add_function(wrap_pyfunction!(brjuno, m)?)?;
    m.add_function(wrap_pyfunction!(bisequence, m)?)?;
    m.add_function(wrap_pyfunction!(orbit, m)?)?;
    m.add_function(wrap_pyfunction!(renorm_check, m)?)?;
    Ok(())
}
