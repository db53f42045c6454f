//! Python bindings: load or generate models, run queries, inspect the
//! resulting distributions.

use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use dpmc::dist::{self, RiskLevel, SparseDist, Statistic};
use dpmc::ingest::{distribution_csv, BenchmarkSpec, ModelFiles, ParseOptions};
use dpmc::run::{self, Loaded, ModelKind, ModelSource, ReportPaths, RunConfig};

fn py_err(e: dpmc::Error) -> PyErr {
    match e.exit_code() {
        1 => PyOSError::new_err(e.to_string()),
        2 => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn alpha(a: f64) -> PyResult<RiskLevel> {
    RiskLevel::new(a).map_err(py_err)
}

#[pymodule]
mod dpmc_py {
    use super::*;

    /// An exact reward distribution over the naturals and infinity.
    #[pyclass(frozen, name = "Distribution")]
    pub struct PyDistribution {
        pub(crate) inner: SparseDist,
    }

    #[pymethods]
    impl PyDistribution {
        #[new]
        #[pyo3(signature = (support, p_inf = 0.0))]
        fn new(support: Vec<(u64, f64)>, p_inf: f64) -> PyResult<Self> {
            Ok(PyDistribution {
                inner: SparseDist::new(support, p_inf).map_err(py_err)?,
            })
        }

        /// `(value, probability)` pairs in increasing value order.
        #[getter]
        fn support(&self) -> Vec<(u64, f64)> {
            self.inner.support().to_vec()
        }

        #[getter]
        fn p_inf(&self) -> f64 {
            self.inner.p_inf()
        }

        fn mean(&self) -> f64 {
            dist::mean(&self.inner)
        }

        fn variance(&self) -> f64 {
            dist::variance(&self.inner)
        }

        fn std_dev(&self) -> f64 {
            dist::std_dev(&self.inner)
        }

        fn mode(&self) -> f64 {
            dist::mode(&self.inner)
        }

        fn var(&self, level: f64) -> PyResult<f64> {
            Ok(dist::value_at_risk(&self.inner, alpha(level)?))
        }

        fn cvar(&self, level: f64) -> PyResult<f64> {
            Ok(dist::cvar(&self.inner, alpha(level)?))
        }

        fn to_csv(&self) -> String {
            distribution_csv(&self.inner)
        }

        fn __len__(&self) -> usize {
            self.inner.support().len()
        }

        fn __repr__(&self) -> String {
            format!(
                "Distribution(atoms={}, mean={}, p_inf={})",
                self.inner.support().len(),
                dist::mean(&self.inner),
                self.inner.p_inf()
            )
        }
    }

    /// A DTMC or MDP together with one reward structure.
    #[pyclass(frozen, name = "Model")]
    pub struct PyModel {
        pub(crate) loaded: Loaded,
        pub(crate) reward: String,
    }

    #[pymethods]
    impl PyModel {
        #[getter]
        fn kind(&self) -> &'static str {
            match self.loaded.model.kind() {
                ModelKind::Dtmc => "dtmc",
                ModelKind::Mdp => "mdp",
            }
        }

        #[getter]
        fn num_states(&self) -> usize {
            self.loaded.model.num_states()
        }

        #[getter]
        fn num_transitions(&self) -> usize {
            self.loaded.model.num_transitions()
        }

        #[getter]
        fn reward(&self) -> &str {
            &self.reward
        }

        /// The formula a generated benchmark was built for.
        #[getter]
        fn formula(&self) -> Option<String> {
            self.loaded.formula_hint.clone()
        }

        #[getter]
        fn vmax(&self) -> Option<f64> {
            self.loaded.vmax_hint
        }

        fn __repr__(&self) -> String {
            format!("Model(kind={}, states={})", self.kind(), self.num_states())
        }
    }

    /// Outcome of `check` or `optimize`.
    #[pyclass(frozen, name = "Result")]
    pub struct PyRunResult {
        pub(crate) inner: run::RunResult,
    }

    #[pymethods]
    impl PyRunResult {
        /// The queried statistic on the exact distribution.
        #[getter]
        fn value(&self) -> f64 {
            self.inner.value
        }

        /// The same statistic on the value-iteration distribution.
        #[getter]
        fn approx_value(&self) -> Option<f64> {
            self.inner.approx_value()
        }

        #[getter]
        fn distribution(&self) -> PyDistribution {
            PyDistribution {
                inner: self.inner.forward.dist.clone(),
            }
        }

        /// `(statistic, exact, approx)` triples.
        #[getter]
        fn statistics(&self) -> Vec<(String, f64, Option<f64>)> {
            self.inner
                .statistics
                .iter()
                .map(|s| (s.statistic.to_string(), s.exact, s.approx))
                .collect()
        }

        /// Approximate distribution at the initial state as `(value, prob)`.
        #[getter]
        fn approx_atoms(&self) -> Option<Vec<(f64, f64)>> {
            use dist::Distribution;
            self.inner.optimization.as_ref().map(|o| o.approx.atoms())
        }

        /// Chosen initial risk budget of a CVaR optimisation.
        #[getter]
        fn budget(&self) -> Option<f64> {
            let o = self.inner.optimization.as_ref()?;
            o.budget.map(|(g, j)| g.atom(j))
        }

        /// The policy in the text format of `--emit-policy`.
        #[getter]
        fn policy(&self) -> Option<String> {
            self.inner.optimization.as_ref().map(|o| o.policy.to_text())
        }

        /// Result document; timings are omitted unless asked for.
        #[pyo3(signature = (timings = false))]
        fn to_json(&self, timings: bool) -> String {
            let doc = run::result_json(&self.inner, &ReportPaths::default(), timings);
            serde_json::to_string_pretty(&doc).expect("serializable")
        }

        fn __repr__(&self) -> String {
            format!("Result({} = {})", self.inner.query, self.inner.value)
        }
    }

    /// Generates a benchmark model: betting, deepsea, obstacle, energy or
    /// mudnails.
    #[pyfunction]
    #[pyo3(signature = (name, size = None, seed = 0))]
    fn generate(name: &str, size: Option<usize>, seed: u64) -> PyResult<PyModel> {
        let mut spec = BenchmarkSpec::new(name.parse().map_err(py_err)?).with_seed(seed);
        if let Some(n) = size {
            spec.size = n;
        }
        let loaded = run::load_model(&ModelSource::Bench(spec), "cost", ParseOptions::default())
            .map_err(py_err)?;
        Ok(PyModel {
            loaded,
            reward: "cost".into(),
        })
    }

    fn load(
        kind: ModelKind,
        tra: PathBuf,
        lab: Option<PathBuf>,
        rew: Option<PathBuf>,
        reward: &str,
        renormalize: bool,
    ) -> PyResult<PyModel> {
        let files = ModelFiles {
            transitions: tra,
            labels: lab,
            rewards: rew.map(|p| (reward.to_string(), p)).into_iter().collect(),
        };
        let loaded = run::load_model(
            &ModelSource::Files { files, kind },
            reward,
            ParseOptions { renormalize },
        )
        .map_err(py_err)?;
        Ok(PyModel {
            loaded,
            reward: reward.into(),
        })
    }

    /// Reads a DTMC from `.tra`, `.lab` and `.rew` files.
    #[pyfunction]
    #[pyo3(signature = (tra, lab = None, rew = None, reward = "r", renormalize = false))]
    fn load_dtmc(
        tra: PathBuf,
        lab: Option<PathBuf>,
        rew: Option<PathBuf>,
        reward: &str,
        renormalize: bool,
    ) -> PyResult<PyModel> {
        load(ModelKind::Dtmc, tra, lab, rew, reward, renormalize)
    }

    /// Reads an MDP from `.tra`, `.lab` and `.rew` files.
    #[pyfunction]
    #[pyo3(signature = (tra, lab = None, rew = None, reward = "r", renormalize = false))]
    fn load_mdp(
        tra: PathBuf,
        lab: Option<PathBuf>,
        rew: Option<PathBuf>,
        reward: &str,
        renormalize: bool,
    ) -> PyResult<PyModel> {
        load(ModelKind::Mdp, tra, lab, rew, reward, renormalize)
    }

    /// Normalised text of a query; raises ValueError when it does not parse.
    #[pyfunction]
    fn parse_query(text: &str) -> PyResult<String> {
        Ok(dpmc::query::parse_query(text).map_err(py_err)?.to_string())
    }

    /// Number of automaton states for a co-safe formula.
    #[pyfunction]
    fn dfa_states(formula: &str) -> PyResult<usize> {
        let f = dpmc::ltl::parse_cosafe(formula).map_err(py_err)?;
        Ok(dpmc::ltl::to_dfa(&f).map_err(py_err)?.num_states())
    }

    /// Answers an `=?` query on a DTMC.
    #[pyfunction]
    #[pyo3(signature = (model, query, eps = 1e-3))]
    fn check(py: Python<'_>, model: &PyModel, query: &str, eps: f64) -> PyResult<PyRunResult> {
        let q = dpmc::query::parse_query(query).map_err(py_err)?;
        let cfg = RunConfig {
            eps,
            ..RunConfig::default()
        };
        let loaded = &model.loaded;
        let inner = py.detach(|| run::run_model(loaded, &q, &cfg)).map_err(py_err)?;
        Ok(PyRunResult { inner })
    }

    /// Answers a `min=?` query on an MDP by distributional value iteration
    /// and evaluates the resulting policy exactly.
    #[pyfunction]
    #[pyo3(signature = (
        model, query, repr = "categorical", atoms = 201, vmin = 0.0, vmax = None,
        eps = 1e-3, conv = 0.01, budget_atoms = 101, alpha = 0.7
    ))]
    #[allow(clippy::too_many_arguments)]
    fn optimize(
        py: Python<'_>,
        model: &PyModel,
        query: &str,
        repr: &str,
        atoms: usize,
        vmin: f64,
        vmax: Option<f64>,
        eps: f64,
        conv: f64,
        budget_atoms: usize,
        alpha: f64,
    ) -> PyResult<PyRunResult> {
        let q = dpmc::query::parse_query(query).map_err(py_err)?;
        let cfg = RunConfig {
            repr: repr.parse().map_err(py_err)?,
            atoms,
            vmin,
            vmax,
            eps,
            conv,
            budget_atoms,
            alpha: super::alpha(alpha)?,
            ..RunConfig::default()
        };
        let loaded = &model.loaded;
        let inner = py.detach(|| run::run_model(loaded, &q, &cfg)).map_err(py_err)?;
        Ok(PyRunResult { inner })
    }

    /// CVaR of `(value, probability)` atoms at level `level`.
    #[pyfunction]
    fn cvar(atoms: Vec<(u64, f64)>, level: f64) -> PyResult<f64> {
        let d = SparseDist::new(atoms, 0.0).map_err(py_err)?;
        Ok(Statistic::CVaR(super::alpha(level)?).evaluate(&d))
    }
}
