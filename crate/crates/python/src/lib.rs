//! Python bindings: predicate text, ontology checks, the concept graph and
//! full engine sessions. Structured results come back as plain dicts and
//! lists.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use reasonchat::nl::NlError;
use reasonchat::{
    EngineData, EngineError, EngineOptions, PredicateSet, RccConfig, Style, Task, Value as Arg,
};

create_exception!(reasonchat_py, ReasonchatError, PyException);
create_exception!(reasonchat_py, BadTask, ReasonchatError);
create_exception!(reasonchat_py, UnknownSession, ReasonchatError);
create_exception!(reasonchat_py, StateClosed, ReasonchatError);
create_exception!(reasonchat_py, InvalidInput, ReasonchatError);
create_exception!(reasonchat_py, BackendUnavailable, ReasonchatError);

fn engine_err(e: EngineError) -> PyErr {
    let msg = e.to_string();
    match e {
        EngineError::BadTask(_) => BadTask::new_err(msg),
        EngineError::UnknownSession(_) => UnknownSession::new_err(msg),
        EngineError::StateClosed => StateClosed::new_err(msg),
        EngineError::Invalid(_) => InvalidInput::new_err(msg),
        EngineError::Backend(NlError::BackendUnavailable { retry_after, .. }) => {
            BackendUnavailable::new_err((msg, retry_after))
        }
        EngineError::Backend(NlError::Timeout) => BackendUnavailable::new_err((msg, None::<u64>)),
        _ => ReasonchatError::new_err(msg),
    }
}

fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| ReasonchatError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn style(name: &str) -> PyResult<Style> {
    match name {
        "concierge" => Ok(Style::Concierge),
        "companion" => Ok(Style::Companion),
        other => Err(PyValueError::new_err(format!("unknown style `{other}`"))),
    }
}

fn task(name: &str) -> PyResult<Task> {
    name.parse().map_err(engine_err)
}

fn arg_to_py<'py>(py: Python<'py>, v: &Arg) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Arg::Atom(s) => s.into_pyobject(py)?.into_any(),
        Arg::List(items) => {
            let out: Vec<Bound<'py, PyAny>> = items.iter().map(|i| arg_to_py(py, i)).collect::<PyResult<_>>()?;
            out.into_pyobject(py)?.into_any()
        }
    })
}

fn arg_from_py(obj: &Bound<'_, PyAny>) -> PyResult<Arg> {
    if let Ok(s) = obj.extract::<String>() {
        return Ok(Arg::atom(s));
    }
    let items: Vec<Bound<'_, PyAny>> = obj.extract()?;
    Ok(Arg::List(items.iter().map(arg_from_py).collect::<PyResult<_>>()?))
}

/// Parses predicate text into `(functor, [args])` tuples; list arguments
/// become Python lists.
#[pyfunction]
fn parse<'py>(py: Python<'py>, text: &str) -> PyResult<Vec<(String, Vec<Bound<'py, PyAny>>)>> {
    let set = reasonchat::parse_predicates(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
    set.iter()
        .map(|p| Ok((p.functor.clone(), p.args.iter().map(|a| arg_to_py(py, a)).collect::<PyResult<_>>()?)))
        .collect()
}

/// Inverse of `parse`.
#[pyfunction]
#[pyo3(signature = (predicates, style = "concierge"))]
fn serialize(predicates: Vec<(String, Vec<Bound<'_, PyAny>>)>, style: &str) -> PyResult<String> {
    let set: PredicateSet = predicates
        .into_iter()
        .map(|(f, args)| Ok(reasonchat::Predicate::new(f, args.iter().map(arg_from_py).collect::<PyResult<_>>()?)))
        .collect::<PyResult<_>>()?;
    Ok(set.serialize(self::style(style)?))
}

#[pyfunction]
fn normalize_whitespace(text: &str) -> String {
    reasonchat::normalize_whitespace(text)
}

#[pyclass(module = "reasonchat_py", frozen)]
struct Ontology {
    inner: reasonchat::Ontology,
}

#[pymethods]
impl Ontology {
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        reasonchat::Ontology::from_toml(text)
            .map(|inner| Self { inner })
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        reasonchat::Ontology::load(path)
            .map(|inner| Self { inner })
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    /// The ontology shipped for `task`.
    #[staticmethod]
    fn bundled(task: &str) -> PyResult<Self> {
        let data = EngineData::bundled();
        let text = match self::task(task)? {
            Task::Concierge => data.concierge_ontology,
            Task::Companion => data.companion_ontology,
        };
        Self::from_toml(&text)
    }

    #[getter]
    fn task(&self) -> &str {
        &self.inner.task
    }

    /// `[(predicate, verdict, detail)]`, one entry per predicate in `text`.
    fn validate(&self, text: &str) -> PyResult<Vec<(String, String, Option<String>)>> {
        let set = reasonchat::parse_predicates(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(self
            .inner
            .validate(&set)
            .entries
            .into_iter()
            .map(|e| (e.predicate.to_string(), e.verdict.to_string(), e.detail))
            .collect())
    }

    fn full_domain(&self, slot: &str) -> PyResult<Vec<String>> {
        self.inner
            .full_domain(slot)
            .map(<[String]>::to_vec)
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!("<Ontology task={:?} slots={}>", self.inner.task, self.inner.slots.len())
    }
}

/// Sessions for both bots over bundled or user-supplied data.
#[pyclass(module = "reasonchat_py", frozen)]
struct Engine {
    inner: reasonchat::Engine,
}

#[pymethods]
impl Engine {
    #[new]
    #[pyo3(signature = (data_dir = None, kb = None, log_dir = None, p_jump = None))]
    fn new(data_dir: Option<PathBuf>, kb: Option<PathBuf>, log_dir: Option<PathBuf>, p_jump: Option<f64>) -> PyResult<Self> {
        let mut data = match data_dir {
            Some(d) => EngineData::from_dir(d).map_err(engine_err)?,
            None => EngineData::bundled(),
        };
        if let Some(kb) = kb {
            data = data.with_kb(kb).map_err(engine_err)?;
        }
        let rcc = p_jump.map_or_else(RccConfig::default, |p| RccConfig { p_jump: p });
        let options = EngineOptions { rcc, log_dir, ..EngineOptions::default() };
        Ok(Self { inner: reasonchat::Engine::new(data, options).map_err(engine_err)? })
    }

    #[pyo3(signature = (task, backend = "mock", seed = None))]
    fn create_session<'py>(&self, py: Python<'py>, task: &str, backend: &str, seed: Option<u64>) -> PyResult<Bound<'py, PyAny>> {
        let info = py.detach(|| self.inner.create_session(task, backend, seed)).map_err(engine_err)?;
        to_py(py, &info)
    }

    fn post_message<'py>(&self, py: Python<'py>, session: &str, text: &str) -> PyResult<Bound<'py, PyAny>> {
        let resp = py.detach(|| self.inner.post_message(session, text)).map_err(engine_err)?;
        to_py(py, &resp)
    }

    /// A turn whose predicates are already known; skips the parser.
    #[pyo3(signature = (session, predicates, text = ""))]
    fn post_predicates<'py>(&self, py: Python<'py>, session: &str, predicates: &str, text: &str) -> PyResult<Bound<'py, PyAny>> {
        let resp = py.detach(|| self.inner.post_predicates(session, text, predicates)).map_err(engine_err)?;
        to_py(py, &resp)
    }

    fn transcript<'py>(&self, py: Python<'py>, session: &str) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.transcript(session).map_err(engine_err)?)
    }

    fn state<'py>(&self, py: Python<'py>, session: &str) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.state_view(session).map_err(engine_err)?)
    }

    fn digest(&self, session: &str) -> PyResult<String> {
        self.inner.digest(session).map_err(engine_err)
    }

    fn sessions(&self) -> Vec<String> {
        self.inner.session_ids()
    }

    /// Rebuilds a session from an event log and returns its digest.
    fn replay(&self, path: PathBuf) -> PyResult<String> {
        Ok(self.inner.replay(path).map_err(engine_err)?.digest())
    }

    /// Restores every logged session; returns how many.
    fn recover(&self) -> PyResult<usize> {
        self.inner.recover().map_err(engine_err)
    }

    /// `[(relation, concept id)]` for a concept of the topic graph.
    fn neighbors(&self, concept: &str) -> PyResult<Vec<(String, String)>> {
        let list = self.inner.graph().neighbors(concept).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(list.into_iter().map(|(r, c)| (r.to_string(), c.id.clone())).collect())
    }

    /// Restaurants matching a set of constraint predicates, best first.
    fn search(&self, constraints: &str) -> PyResult<Vec<String>> {
        let onto = self.inner.ontology(Task::Concierge);
        let set = reasonchat::parse_predicates(constraints).map_err(|e| PyValueError::new_err(e.to_string()))?;
        let state = reasonchat::DialogState::new("search").update(&set, onto).map_err(|e| InvalidInput::new_err(e.to_string()))?;
        Ok(self.inner.knowledge_base().filter(&state, onto).into_iter().map(|r| r.name.clone()).collect())
    }
}

#[pymodule]
fn reasonchat_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(parse, m)?)?;
    m.add_function(wrap_pyfunction!(serialize, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_whitespace, m)?)?;
    m.add_class::<Ontology>()?;
    m.add_class::<Engine>()?;
    let py = m.py();
    m.add("ReasonchatError", py.get_type::<ReasonchatError>())?;
    m.add("BadTask", py.get_type::<BadTask>())?;
    m.add("UnknownSession", py.get_type::<UnknownSession>())?;
    m.add("StateClosed", py.get_type::<StateClosed>())?;
    m.add("InvalidInput", py.get_type::<InvalidInput>())?;
    m.add("BackendUnavailable", py.get_type::<BackendUnavailable>())?;
    Ok(())
}
